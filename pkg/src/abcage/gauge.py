"""Exact 2x2 link-field algebra for a single rhombic plaquette.

A plaquette carries four U(2) links arranged as::

        B
   u1 /   \\ u2
     A     A'
   u3 \\   / u4
        C

The upper path A -> B -> A' accumulates ``u2 @ u1`` and the lower path
A -> C -> A' accumulates ``u4 @ u3``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

UNITARITY_TOL = 1e-12
DEFAULT_TOL = 1e-10

ORDERINGS = ("main_text", "holonomy")
DIRECTIONS = ("rightward", "leftward")


class LinkError(ValueError):
    """Raised when a link matrix is not a 2x2 unitary."""


def _as_matrix(entries) -> np.ndarray:
    m = np.array(entries, dtype=complex)
    if m.shape != (2, 2):
        raise LinkError(f"link must be 2x2, got shape {m.shape}")
    return m


@dataclass(frozen=True, eq=False)
class UnitaryLink:
    """A 2x2 unitary decorating one lattice bond.

    Determinant -1 matrices such as the spin flip are admitted, so the
    group is U(2) rather than SU(2).
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.matrix)
        err = np.linalg.norm(m.conj().T @ m - np.eye(2))
        if not np.isfinite(err) or err > UNITARITY_TOL:
            raise LinkError(f"link is not unitary (||U^dag U - 1||_F = {err:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def diag_phase(cls, phi_upper: float = 0.0, phi_lower: float = 0.0) -> "UnitaryLink":
        return cls(np.diag([np.exp(1j * phi_upper), np.exp(1j * phi_lower)]))

    @property
    def dag(self) -> np.ndarray:
        return self.matrix.conj().T

    def __array__(self, dtype=None, copy=None):
        return np.array(self.matrix, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, UnitaryLink):
            return NotImplemented
        return bool(np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def __repr__(self):
        return f"UnitaryLink({self.matrix.tolist()!r})"


IDENTITY = UnitaryLink(np.eye(2))
SPIN_FLIP = UnitaryLink([[0, 1], [1, 0]])
# diag(-1, 1) and diag(1, -1): a pi phase on the down or the up component
PHASE_DOWN = UnitaryLink(np.diag([-1.0, 1.0]))
PHASE_UP = UnitaryLink(np.diag([1.0, -1.0]))

NAMED_LINKS = {
    "identity": IDENTITY,
    "spin_flip": SPIN_FLIP,
    "phase_down": PHASE_DOWN,
    "phase_up": PHASE_UP,
}


@dataclass(frozen=True)
class Plaquette:
    """Ordered links (u1: A->B, u2: B->A', u3: A->C, u4: C->A')."""

    u1: UnitaryLink
    u2: UnitaryLink
    u3: UnitaryLink
    u4: UnitaryLink

    def __post_init__(self):
        for name in ("u1", "u2", "u3", "u4"):
            val = getattr(self, name)
            if not isinstance(val, UnitaryLink):
                object.__setattr__(self, name, UnitaryLink(val))

    @classmethod
    def from_matrices(cls, u1, u2, u3, u4) -> "Plaquette":
        return cls(UnitaryLink(u1), UnitaryLink(u2), UnitaryLink(u3), UnitaryLink(u4))

    @property
    def links(self) -> tuple[UnitaryLink, UnitaryLink, UnitaryLink, UnitaryLink]:
        return (self.u1, self.u2, self.u3, self.u4)

    def matrices(self) -> tuple[np.ndarray, ...]:
        return tuple(link.matrix for link in self.links)

    @property
    def upper_path(self) -> np.ndarray:
        return self.u2.matrix @ self.u1.matrix

    @property
    def lower_path(self) -> np.ndarray:
        return self.u4.matrix @ self.u3.matrix


def abelian_fig2() -> Plaquette:
    return Plaquette(SPIN_FLIP, PHASE_DOWN, PHASE_DOWN, SPIN_FLIP)


def nonabelian_fig2() -> Plaquette:
    return Plaquette(IDENTITY, IDENTITY, IDENTITY, SPIN_FLIP)


def second_order_fig3() -> Plaquette:
    return Plaquette(PHASE_DOWN, IDENTITY, PHASE_UP, SPIN_FLIP)


def abelian_fig4(phi: float) -> Plaquette:
    u = UnitaryLink.diag_phase(phi, 0.0)
    return Plaquette(SPIN_FLIP, u, u, SPIN_FLIP)


def nonabelian_fig4(phi: float) -> Plaquette:
    return Plaquette(
        UnitaryLink.diag_phase(phi, 0.0),
        IDENTITY,
        UnitaryLink.diag_phase(0.0, phi),
        SPIN_FLIP,
    )


def loop_matrix(p: Plaquette, ordering: str = "main_text") -> np.ndarray:
    """Ordered link product around the plaquette.

    ``main_text`` is U3 U4 U2 U1; ``holonomy`` is U3^dag U4^dag U2 U1, i.e. the
    lower path traversed backwards after the upper path.
    """
    u1, u2, u3, u4 = p.matrices()
    if ordering == "main_text":
        return u3 @ u4 @ u2 @ u1
    if ordering == "holonomy":
        return u3.conj().T @ u4.conj().T @ u2 @ u1
    raise ValueError(f"unknown ordering {ordering!r}; expected one of {ORDERINGS}")


def wilson_loop(p: Plaquette, ordering: str = "main_text") -> float:
    """|Tr| of the ordered loop product, in [0, 2]."""
    val = abs(np.trace(loop_matrix(p, ordering)))
    # rounding can push a unitary trace a hair above 2
    return float(min(val, 2.0))


def interference_matrix(p: Plaquette) -> np.ndarray:
    """T = (U2 U1 + U4 U3) / 2, the effective A_n -> A_{n+1} hop."""
    return 0.5 * (p.upper_path + p.lower_path)


def caging_order(
    T,
    psi,
    direction: str = "rightward",
    max_order: int = 10,
    tol: float = DEFAULT_TOL,
) -> Optional[int]:
    """Smallest m <= max_order with ||T^m psi|| < tol, or None.

    Leftward transport uses T^dag in place of T.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    T = np.asarray(T, dtype=complex)
    if direction == "leftward":
        T = T.conj().T
    elif direction != "rightward":
        raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")
    v = np.asarray(psi, dtype=complex)
    for m in range(1, max_order + 1):
        v = T @ v
        if np.linalg.norm(v) < tol:
            return m
    return None


@dataclass(frozen=True)
class Classification:
    abelian: bool
    theta: Optional[float]
    state_independent_caging: bool


def classify_plaquette(
    p: Plaquette, tol: float = DEFAULT_TOL, ordering: str = "holonomy"
) -> Classification:
    """Abelian/non-Abelian dichotomy for one plaquette.

    If the loop product is proportional to the identity, U2 U1 = e^{i theta} U4 U3
    and T = (1 + e^{i theta})/2 U4 U3: either theta = pi and T vanishes for every
    spinor, or T is a nonzero multiple of a unitary and nothing cages.
    ``theta`` is the phase of Tr(loop)/2 on (-pi, pi]. The caging guarantee
    is only a theorem for the ``holonomy`` ordering.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    tr = np.trace(loop_matrix(p, ordering))
    abelian = bool(abs(abs(tr) - 2.0) < tol)
    if not abelian:
        return Classification(False, None, False)
    theta = float(np.angle(tr / 2.0))
    if theta <= -np.pi:
        theta = np.pi
    dist_to_pi = abs(np.angle(np.exp(1j * (theta - np.pi))))
    return Classification(True, theta, bool(dist_to_pi < tol))


def spinor(components, normalize: bool = False) -> np.ndarray:
    """Two-component spin state (down, up)."""
    v = np.asarray(components, dtype=complex).reshape(-1)
    if v.shape != (2,):
        raise ValueError(f"spinor must have 2 components, got {v.shape}")
    if normalize:
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError("cannot normalize the zero spinor")
        v = v / nrm
    return v


def phase_spinor(phi: float) -> np.ndarray:
    """(e^{i phi}, 1)/sqrt(2)."""
    return np.array([np.exp(1j * phi), 1.0], dtype=complex) / np.sqrt(2)


PSI_OUT = spinor([-1, 1]) / np.sqrt(2)
PSI_IN = spinor([1, 1]) / np.sqrt(2)
