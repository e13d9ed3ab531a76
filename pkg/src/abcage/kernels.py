"""Backend selection for the Lindblad right-hand side.

The compiled Cython kernel is used when it imports; otherwise the numpy
implementation is. Set ``ABCAGE_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np
from scipy import sparse

from . import _kernels_py

BACKEND = "python"
_compiled = None

if not os.environ.get("ABCAGE_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _compiled = None


class LindbladRHS:
    """Right-hand side of the structured master equation for a fixed generator.

    ``sz`` is the diagonal of the dephasing operator; ``g_down``/``g_up`` are
    the rates of the phonon lowering/raising collapse operators acting on
    rungs of ``block`` internal states.
    """

    def __init__(self, H, sz, g_deph=0.0, g_down=0.0, g_up=0.0, block=6, backend=None):
        H = np.ascontiguousarray(H, dtype=complex)
        d = H.shape[0]
        if H.shape != (d, d) or d % block:
            raise ValueError(f"H of shape {H.shape} incompatible with block {block}")
        self.d = d
        self.block = int(block)
        self.sz = np.ascontiguousarray(sz, dtype=float)
        self.g_deph, self.g_down, self.g_up = float(g_deph), float(g_down), float(g_up)
        backend = backend or BACKEND
        if backend == "cython" and _compiled is None:
            raise RuntimeError("compiled kernel not available")
        self.backend = backend
        csr = sparse.csr_matrix(H)
        csr.sort_indices()
        self._indptr = np.ascontiguousarray(csr.indptr, dtype=np.int_)
        self._indices = np.ascontiguousarray(csr.indices, dtype=np.int_)
        self._data = np.ascontiguousarray(csr.data, dtype=complex)
        self._data_f = self._data.view(np.float64)
        if backend == "python":
            self._dense = _kernels_py.DenseRHS(H, self.sz, self.g_deph, self.g_down, self.g_up, self.block)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.ascontiguousarray(rho, dtype=complex)
        out = np.empty_like(rho)
        if self.backend == "cython":
            _compiled.lindblad_rhs(
                rho.view(np.float64), out.view(np.float64), self._indptr, self._indices, self._data_f,
                self.sz, self.g_deph, self.g_down, self.g_up, self.block,
            )
        else:
            self._dense(rho, out)
        return out

    def __call__(self, t, y):
        return self.apply(y.reshape(self.d, self.d)).reshape(-1)
