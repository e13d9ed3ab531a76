"""Hypothesis strategies shared by the test modules."""
import numpy as np
from hypothesis import strategies as st

finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
angles = st.floats(-np.pi, np.pi, allow_nan=False, allow_infinity=False)


def _u2(a):
    """U(2) from Euler-type angles."""
    alpha, beta, gamma, delta = a
    c, s = np.cos(gamma), np.sin(gamma)
    return np.exp(1j * alpha) * np.array([
        [np.exp(1j * beta) * c, np.exp(1j * delta) * s],
        [-np.exp(-1j * delta) * s, np.exp(-1j * beta) * c],
    ])


unitaries = st.tuples(angles, angles, angles, angles).map(_u2)

spinors = (
    st.lists(finite, min_size=4, max_size=4)
    .map(lambda v: np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]]))
    .filter(lambda v: np.linalg.norm(v) > 1e-2)
    .map(lambda v: v / np.linalg.norm(v))
)


def random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_spinor(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def random_hermitian_unitary(rng):
    """V diag(+-1) V^dag, or +-identity."""
    V = random_unitary(rng)
    signs = rng.choice([-1.0, 1.0], size=2)
    M = V @ np.diag(signs) @ V.conj().T
    # symmetrize so that M^dag == M holds bit for bit
    return 0.5 * (M + M.conj().T)
