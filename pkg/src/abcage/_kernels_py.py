"""Numpy implementation of the structured Lindblad right-hand side.

Same contract as the compiled ``_kernels.lindblad_rhs``; used when the
extension is unavailable or ``ABCAGE_PURE_PYTHON`` is set.
"""
import numpy as np


def _anticommutator_coefficients(d, sz, g_deph, g_down, g_up, block):
    n = np.arange(d) // block
    top = d // block - 1
    m = np.where(n < top, n + 1.0, 0.0)
    deph = np.outer(sz, sz) - 0.5 * (sz**2)[:, None] - 0.5 * (sz**2)[None, :]
    return (
        g_deph * deph
        - 0.5 * g_down * (n[:, None] + n[None, :])
        - 0.5 * g_up * (m[:, None] + m[None, :])
    )


def lindblad_rhs(rho, out, indptr, indices, data, sz, g_deph, g_down, g_up, block):
    """Same arguments as the compiled kernel: rho and out are (d, 2d) float64
    views of complex matrices and data holds interleaved real, imaginary parts."""
    rho = np.asarray(rho).view(complex)
    out = np.asarray(out).view(complex)
    data = np.asarray(data).view(complex)
    d = rho.shape[0]
    H = np.zeros((d, d), dtype=complex)
    rows = np.repeat(np.arange(d), np.diff(indptr))
    H[rows, indices] = data
    out[...] = _anticommutator_coefficients(d, sz, g_deph, g_down, g_up, block) * rho
    out += -1j * (H @ rho - rho @ H)
    n = np.arange(d) // block
    if g_down != 0.0:
        s = np.sqrt(n[: d - block] + 1.0)
        out[: d - block, : d - block] += g_down * np.outer(s, s) * rho[block:, block:]
    if g_up != 0.0:
        s = np.sqrt(n[block:].astype(float))
        out[block:, block:] += g_up * np.outer(s, s) * rho[: d - block, : d - block]


class DenseRHS:
    """Precomputed variant for repeated calls with a fixed generator."""

    def __init__(self, H, sz, g_deph, g_down, g_up, block):
        self.H = np.asarray(H, dtype=complex)
        d = self.H.shape[0]
        self.d = d
        self.block = block
        self.g_down = g_down
        self.g_up = g_up
        self.coef = _anticommutator_coefficients(d, np.asarray(sz, float), g_deph, g_down, g_up, block)
        n = np.arange(d) // block
        s_lo = np.sqrt(n[: d - block] + 1.0)
        s_hi = np.sqrt(n[block:].astype(float))
        self.down_w = g_down * np.outer(s_lo, s_lo)
        self.up_w = g_up * np.outer(s_hi, s_hi)

    def __call__(self, rho, out):
        b, d, H = self.block, self.d, self.H
        np.multiply(self.coef, rho, out=out)
        out += -1j * (H @ rho - rho @ H)
        if self.g_down != 0.0:
            out[: d - b, : d - b] += self.down_w * rho[b:, b:]
        if self.g_up != 0.0:
            out[b:, b:] += self.up_w * rho[: d - b, : d - b]
