"""Spin-phonon rhombic lattice on the truncated 6(N+1)-dimensional space.

Basis ordering is phonon-major, then manifold (A, B, C), then spin
(down, up)::

    index = 6 * n + 2 * manifold + spin

Units: hbar = 1, angular frequencies in rad/ms, times in ms.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .gauge import Plaquette, nonabelian_fig2

MANIFOLDS = ("A", "B", "C")
SPINS = ("down", "up")
SPIN_TAGS = {"down": "dn", "up": "up"}
SITES_PER_RUNG = 6

# A sits in S_1/2, B and C in D_5/2
D_MANIFOLDS = frozenset({"B", "C"})

J_DEFAULT = 2 * np.pi * 2.5
CUTOFF_DEFAULT = 8
DETUNING_PLACEMENTS = ("d_manifold", "sigma_z_half")


class CutoffError(IndexError):
    """Phonon number outside 0..N."""


class SiteIndex(NamedTuple):
    manifold: str
    spin: str
    phonon: int

    @property
    def label(self) -> str:
        return f"{self.manifold}_{SPIN_TAGS[self.spin]}_{self.phonon}"


@dataclass(frozen=True)
class LatticeConfig:
    plaquette: Plaquette = field(default_factory=nonabelian_fig2)
    J: float = J_DEFAULT
    cutoff: int = CUTOFF_DEFAULT
    translational_invariant: bool = False
    detuning: float = 0.0
    detuning_placement: str = "d_manifold"

    def __post_init__(self):
        if not self.J > 0:
            raise ValueError(f"J must be positive, got {self.J}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValueError(f"cutoff must be an integer >= 1, got {self.cutoff}")
        if self.detuning_placement not in DETUNING_PLACEMENTS:
            raise ValueError(f"unknown detuning placement {self.detuning_placement!r}")

    @property
    def dim(self) -> int:
        return SITES_PER_RUNG * (self.cutoff + 1)


def _cutoff_of(config_or_cutoff) -> int:
    if isinstance(config_or_cutoff, LatticeConfig):
        return config_or_cutoff.cutoff
    return int(config_or_cutoff)


def site_index(site: SiteIndex | tuple, config) -> int:
    """Basis index of ``site``; ``config`` may be a LatticeConfig or the cutoff N."""
    manifold, spin, n = site
    N = _cutoff_of(config)
    if not 0 <= n <= N:
        raise CutoffError(f"phonon {n} outside 0..{N}")
    try:
        m = MANIFOLDS.index(manifold)
        s = SPINS.index(spin)
    except ValueError as exc:
        raise ValueError(f"bad site {site!r}") from exc
    return SITES_PER_RUNG * n + 2 * m + s


def index_to_site(index: int, config) -> SiteIndex:
    N = _cutoff_of(config)
    dim = SITES_PER_RUNG * (N + 1)
    if not 0 <= index < dim:
        raise CutoffError(f"index {index} outside 0..{dim - 1}")
    n, rem = divmod(int(index), SITES_PER_RUNG)
    m, s = divmod(rem, 2)
    return SiteIndex(MANIFOLDS[m], SPINS[s], n)


def iter_sites(config) -> Iterator[SiteIndex]:
    N = _cutoff_of(config)
    for i in range(SITES_PER_RUNG * (N + 1)):
        yield index_to_site(i, N)


def site_labels(config) -> list[str]:
    return [s.label for s in iter_sites(config)]


def block_slice(manifold: str, phonon: int, config) -> slice:
    """Slice covering the (down, up) pair of one lattice site."""
    i = site_index((manifold, "down", phonon), config)
    return slice(i, i + 2)


def d_manifold_mask(config) -> np.ndarray:
    return np.array([s.manifold in D_MANIFOLDS for s in iter_sites(config)])


def sideband_factor(n: int, translational_invariant: bool) -> float:
    """Red-sideband matrix element between rungs n and n+1."""
    return 1.0 if translational_invariant else float(np.sqrt(n + 1))


def hopping_matrix(
    J: float,
    cutoff: int,
    links: dict[str, np.ndarray],
    translational_invariant: bool = False,
) -> np.ndarray:
    """Hermitian hopping operator for any subset of the four links.

    ``links`` maps a subset of {"u1", "u2", "u3", "u4"} to 2x2 blocks; missing
    links are switched off. Used directly for the single-link pulses of the
    loop-measurement protocol.
    """
    dim = SITES_PER_RUNG * (cutoff + 1)
    h = np.zeros((dim, dim), dtype=complex)
    half = 0.5 * J
    for n in range(cutoff + 1):
        a = block_slice("A", n, cutoff)
        b = block_slice("B", n, cutoff)
        c = block_slice("C", n, cutoff)
        if "u1" in links:
            h[b, a] += half * np.asarray(links["u1"])
        if "u3" in links:
            h[c, a] += half * np.asarray(links["u3"])
        if n + 1 > cutoff:
            continue  # hard wall: no phonon N+1
        a_next = block_slice("A", n + 1, cutoff)
        s = sideband_factor(n, translational_invariant)
        if "u2" in links:
            h[a_next, b] += half * s * np.asarray(links["u2"])
        if "u4" in links:
            h[a_next, c] += half * s * np.asarray(links["u4"])
    # every block written above lies strictly below the diagonal
    return h + h.conj().T


def add_detuning(H: np.ndarray, delta: float, placement: str = "d_manifold") -> np.ndarray:
    """Return H plus a constant detuning of the D_5/2 (B, C) sites.

    ``d_manifold`` shifts every B/C diagonal entry by ``delta``;
    ``sigma_z_half`` adds +delta/2 on B/C and -delta/2 on A.
    """
    H = np.array(H, dtype=complex, copy=True)
    if delta == 0:
        return H
    dim = H.shape[0]
    if dim % SITES_PER_RUNG:
        raise ValueError(f"dimension {dim} is not a multiple of {SITES_PER_RUNG}")
    mask = d_manifold_mask(dim // SITES_PER_RUNG - 1)
    if placement == "d_manifold":
        shift = np.where(mask, delta, 0.0)
    elif placement == "sigma_z_half":
        shift = np.where(mask, 0.5 * delta, -0.5 * delta)
    else:
        raise ValueError(f"unknown detuning placement {placement!r}")
    H[np.diag_indices(dim)] += shift
    return H


def build_hamiltonian(config: LatticeConfig) -> np.ndarray:
    """Dense rotating-frame lattice Hamiltonian for ``config``."""
    u1, u2, u3, u4 = config.plaquette.matrices()
    H = hopping_matrix(
        config.J,
        config.cutoff,
        {"u1": u1, "u2": u2, "u3": u3, "u4": u4},
        config.translational_invariant,
    )
    return add_detuning(H, config.detuning, config.detuning_placement)


def is_hermitian(H: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.linalg.norm(H - H.conj().T) < tol)


def format_matrix(H: np.ndarray) -> str:
    """Row-major text dump: a ``# dim`` header then one row per line of ``re,im`` pairs."""
    H = np.asarray(H, dtype=complex)
    lines = [f"# dim {H.shape[0]} {H.shape[1]}"]
    for row in H:
        lines.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = []
    shape = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "dim":
                shape = (int(parts[1]), int(parts[2]))
            continue
        row = []
        for pair in line.split():
            re, im = pair.split(",")
            row.append(complex(float(re), float(im)))
        rows.append(row)
    M = np.array(rows, dtype=complex)
    if shape is not None and M.shape != shape:
        raise ValueError(f"matrix shape {M.shape} does not match header {shape}")
    return M


def save_matrix(path, H: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write(format_matrix(H))


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return parse_matrix(fh.read())
