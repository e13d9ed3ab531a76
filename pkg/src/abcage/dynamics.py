"""Closed- and open-system propagation on the spin-phonon lattice."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .gauge import Plaquette
from .lattice import (
    SITES_PER_RUNG,
    LatticeConfig,
    SiteIndex,
    add_detuning,
    block_slice,
    d_manifold_mask,
    hopping_matrix,
    iter_sites,
    site_labels,
)

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
EIG_TOL = 1e-8


class IntegrationError(RuntimeError):
    """The master-equation integrator stopped before the last output time."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class NoiseModel:
    """Heating, spin dephasing, constant detuning and imperfect cooling.

    Rates in 1/ms, detuning in rad/ms. The defaults are 100 Hz heating,
    200 Hz dephasing, a 220 Hz detuning and a thermal initial phonon
    distribution with mean occupation 0.05.
    """

    gamma1: float = 0.1
    gamma2: float = 0.2
    detuning: float = 2 * np.pi * 0.22
    initial_nbar: float = 0.05
    detuning_placement: str = "d_manifold"

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "initial_nbar"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(gamma1=0.0, gamma2=0.0, detuning=0.0, initial_nbar=0.0)


def _cutoff_from_dim(dim: int) -> int:
    if dim % SITES_PER_RUNG:
        raise ValueError(f"dimension {dim} is not a multiple of {SITES_PER_RUNG}")
    return dim // SITES_PER_RUNG - 1


def check_state(psi: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("state must be a vector")
    _cutoff_from_dim(psi.size)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1) > tol:
        raise ValueError(f"state norm {nrm} differs from 1")
    return psi


def check_density_matrix(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    _cutoff_from_dim(rho.shape[0])
    if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > TRACE_TOL:
        raise ValueError(f"density matrix trace {np.trace(rho).real} differs from 1")
    if np.linalg.eigvalsh(rho).min() < -EIG_TOL:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def prepare_state(manifold: str, phonon: int, spinor, config) -> np.ndarray:
    """Put ``spinor`` (down, up) on site (manifold, phonon)."""
    sp = np.asarray(spinor, dtype=complex).reshape(-1)
    if sp.shape != (2,):
        raise ValueError("spinor must have two components")
    if abs(np.linalg.norm(sp) - 1) > 1e-12:
        raise ValueError("initial spinor must be normalized")
    cutoff = config.cutoff if isinstance(config, LatticeConfig) else int(config)
    psi = np.zeros(SITES_PER_RUNG * (cutoff + 1), dtype=complex)
    psi[block_slice(manifold, phonon, cutoff)] = sp
    return psi


def thermal_weights(nbar: float, count: int) -> np.ndarray:
    """Thermal occupation of ``count`` levels, truncated and renormalized."""
    if nbar <= 0:
        w = np.zeros(count)
        w[0] = 1.0
        return w
    q = nbar / (1.0 + nbar)
    w = q ** np.arange(count)
    return w / w.sum()


def thermal_density_matrix(manifold: str, phonon: int, spinor, config, nbar: float) -> np.ndarray:
    """Spin state on ``manifold`` with a thermal phonon excess above ``phonon``.

    Imperfect cooling is modelled as an occupation ``phonon + k`` with thermal
    weight of ``k``, truncated at the cutoff.
    """
    cutoff = config.cutoff if isinstance(config, LatticeConfig) else int(config)
    weights = thermal_weights(nbar, cutoff - phonon + 1)
    dim = SITES_PER_RUNG * (cutoff + 1)
    rho = np.zeros((dim, dim), dtype=complex)
    for k, w in enumerate(weights):
        if w == 0:
            continue
        psi = prepare_state(manifold, phonon + k, spinor, cutoff)
        rho += w * np.outer(psi, psi.conj())
    return rho


def populations_of(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    if state.ndim == 1:
        return np.abs(state) ** 2
    return np.real(np.diagonal(state, axis1=-2, axis2=-1)).copy()


def site_populations(state) -> dict[SiteIndex, float]:
    pops = populations_of(state)
    cutoff = _cutoff_from_dim(pops.size)
    return {site: float(p) for site, p in zip(iter_sites(cutoff), pops)}


def p0(state) -> float:
    """Total population on the six n = 0 basis states."""
    return float(populations_of(state)[:SITES_PER_RUNG].sum())


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    cutoff: int
    mixed: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def populations(self) -> np.ndarray:
        """Shape (len(times), dim) array of basis-state populations."""
        if self.mixed:
            return np.real(np.diagonal(self.states, axis1=1, axis2=2)).copy()
        return np.abs(self.states) ** 2

    @property
    def labels(self) -> list[str]:
        return site_labels(self.cutoff)

    def p0(self) -> np.ndarray:
        return self.populations[:, :SITES_PER_RUNG].sum(axis=1)

    def site_population(self, manifold: str, phonon: int) -> np.ndarray:
        return self.populations[:, block_slice(manifold, phonon, self.cutoff)].sum(axis=1)

    def rung_population(self, phonon: int) -> np.ndarray:
        start = SITES_PER_RUNG * phonon
        return self.populations[:, start : start + SITES_PER_RUNG].sum(axis=1)

    def population_outside(self, indices) -> np.ndarray:
        pops = self.populations
        mask = np.ones(pops.shape[1], dtype=bool)
        mask[list(indices)] = False
        return pops[:, mask].sum(axis=1)

    def to_csv(self, path=None) -> str:
        """time_ms, one column per basis state, then P0."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_ms", *self.labels, "P0"])
        pops = self.populations
        for t, row, q in zip(self.times, pops, self.p0()):
            w.writerow([_fmt(t), *(_fmt(x) for x in row), _fmt(q)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float).reshape(-1)
    if times.size == 0:
        raise ValueError("times must be non-empty")
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted and non-negative")
    return times


def evolve_unitary(H: np.ndarray, psi0: np.ndarray, times) -> Trajectory:
    """Exact propagation by Hermitian eigendecomposition."""
    H = np.asarray(H, dtype=complex)
    scale = max(1.0, np.abs(H).max())
    if np.abs(H - H.conj().T).max() > 1e-12 * scale:
        raise ValueError("Hamiltonian is not Hermitian")
    psi0 = check_state(psi0)
    times = _check_times(times)
    energies, vecs = np.linalg.eigh(H)
    coeffs = vecs.conj().T @ psi0
    phases = np.exp(-1j * np.outer(times, energies))
    states = (phases * coeffs) @ vecs.T
    states[times == 0] = psi0  # the identity propagator, without eigenbasis rounding
    norm_err = np.abs(np.linalg.norm(states, axis=1) - 1).max()
    if norm_err > NORM_TOL:
        raise ArithmeticError(f"norm drift {norm_err:.3e} in unitary propagation")
    return Trajectory(times, states, _cutoff_from_dim(psi0.size), False, {"max_norm_drift": float(norm_err)})


def dephasing_diagonal(cutoff: int) -> np.ndarray:
    """sigma_z = D_5/2 projector minus S_1/2 projector, as a diagonal."""
    return np.where(d_manifold_mask(cutoff), 1.0, -1.0)


def lindblad_rhs(H: np.ndarray, noise: NoiseModel, backend: Optional[str] = None) -> kernels.LindbladRHS:
    cutoff = _cutoff_from_dim(H.shape[0])
    return kernels.LindbladRHS(
        H,
        dephasing_diagonal(cutoff),
        g_deph=noise.gamma2,
        g_down=noise.gamma1,
        g_up=noise.gamma1,
        block=SITES_PER_RUNG,
        backend=backend,
    )


def evolve_lindblad(
    H: np.ndarray,
    rho0: np.ndarray,
    noise: NoiseModel,
    times,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    backend: Optional[str] = None,
) -> Trajectory:
    """Integrate the master equation with an adaptive explicit Runge-Kutta scheme.

    Collapse operators are sqrt(gamma1) a, sqrt(gamma1) a^dag and
    sqrt(gamma2) sigma_z. ``noise.detuning`` is added to ``H`` here. The state
    is never renormalized; trace, Hermiticity and positivity drifts are
    recorded in ``diagnostics``.
    """
    H = np.asarray(H, dtype=complex)
    if np.abs(H - H.conj().T).max() > 1e-12 * max(1.0, np.abs(H).max()):
        raise ValueError("Hamiltonian is not Hermitian")
    rho0 = check_density_matrix(rho0)
    times = _check_times(times)
    H = add_detuning(H, noise.detuning, noise.detuning_placement)
    d = H.shape[0]
    rhs = lindblad_rhs(H, noise, backend)

    t_end = float(times[-1])
    if t_end == 0.0:
        states = np.repeat(rho0[None], times.size, axis=0)
        nfev = 0
    else:
        sol = solve_ivp(
            rhs,
            (0.0, t_end),
            rho0.reshape(-1),
            method="DOP853",
            t_eval=times,
            rtol=rtol,
            atol=atol,
        )
        if sol.status != 0:
            t_fail = float(sol.t[-1]) if sol.t.size else 0.0
            raise IntegrationError(f"integration failed at t = {t_fail:.6g} ms: {sol.message}", t_fail)
        states = sol.y.T.reshape(-1, d, d)
        nfev = int(sol.nfev)

    traces = np.real(np.trace(states, axis1=1, axis2=2))
    herm = np.abs(states - np.conj(np.transpose(states, (0, 2, 1)))).max(axis=(1, 2))
    herm_part = 0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))
    min_eig = np.linalg.eigvalsh(herm_part).min(axis=1)
    diagnostics = {
        "max_trace_drift": float(np.abs(traces - 1).max()),
        "max_hermiticity_drift": float(herm.max()),
        "min_eigenvalue": float(min_eig.min()),
        "nfev": nfev,
        "backend": rhs.backend,
    }
    return Trajectory(times, states, _cutoff_from_dim(d), True, diagnostics)


# -- loop measurement ---------------------------------------------------------

# u1 and u2 run forward along the upper path, then u4 and u3 are traversed
# backwards along the lower path, so the net map is U3^dag U4^dag U2 U1.
PULSE_SEQUENCE = ("u1", "u2", "u4", "u3")
PROTOCOL_PREPARATIONS = (
    np.array([1.0, 0.0], dtype=complex),
    np.array([0.0, 1.0], dtype=complex),
    np.array([1.0, 1.0], dtype=complex) / np.sqrt(2),
    np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2),
)


def _dominant_column(rho2: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (rho2 + rho2.conj().T))
    return v[:, -1] * np.sqrt(max(w[-1], 0.0))


def reconstruct_loop_map(blocks) -> np.ndarray:
    """2x2 loop map from the final A_0 spin blocks of the four preparations.

    ``blocks`` holds the reduced A_0 density blocks after preparing down, up,
    (down + up)/sqrt2 and (down + i up)/sqrt2. Column magnitudes come from the
    two basis preparations; their relative phase from the two superpositions,
    whose cross terms combine to W|down><up|W^dag.
    """
    r_dn, r_up, r_plus, r_plus_i = (np.asarray(b, dtype=complex) for b in blocks)
    w0 = _dominant_column(r_dn)
    w1 = _dominant_column(r_up)
    mean = 0.5 * (r_dn + r_up)
    cross = (r_plus - mean) + 1j * (r_plus_i - mean)
    c = np.sum(np.conj(np.outer(w0, w1.conj())) * cross)
    phase = c / abs(c) if abs(c) > 1e-14 else 1.0
    return np.column_stack([w0, w1 * np.conj(phase)])


def loop_map_protocol(
    p: Plaquette,
    J: float,
    noise: Optional[NoiseModel] = None,
    cutoff: int = 8,
    translational_invariant: bool = False,
    backend: Optional[str] = None,
) -> np.ndarray:
    """Simulate sequential pi pulses around the n = 0 plaquette and rebuild the loop map.

    Each link is driven alone for t_pi = pi / J (the hop matrix element J/2
    gives Rabi frequency J).
    """
    if not J > 0:
        raise ValueError("J must be positive")
    t_pi = np.pi / J
    links = dict(zip(("u1", "u2", "u3", "u4"), p.matrices()))
    pulses = [hopping_matrix(J, cutoff, {name: links[name]}, translational_invariant) for name in PULSE_SEQUENCE]
    a0 = block_slice("A", 0, cutoff)

    blocks = []
    if noise is None:
        props = []
        for h in pulses:
            e, v = np.linalg.eigh(h)
            props.append((v * np.exp(-1j * e * t_pi)) @ v.conj().T)
        for sp in PROTOCOL_PREPARATIONS:
            psi = prepare_state("A", 0, sp, cutoff)
            for u in props:
                psi = u @ psi
            blocks.append(np.outer(psi[a0], psi[a0].conj()))
    else:
        for sp in PROTOCOL_PREPARATIONS:
            rho = thermal_density_matrix("A", 0, sp, cutoff, noise.initial_nbar)
            for h in pulses:
                traj = evolve_lindblad(h, rho, noise, [0.0, t_pi], backend=backend)
                rho = traj.states[-1]
            blocks.append(rho[a0, a0])
    return reconstruct_loop_map(blocks)


def wilson_loop_protocol(
    p: Plaquette,
    J: float,
    noise: Optional[NoiseModel] = None,
    cutoff: int = 8,
    translational_invariant: bool = False,
    backend: Optional[str] = None,
) -> float:
    """|Tr| of the loop map measured by the pi-pulse protocol."""
    W = loop_map_protocol(p, J, noise, cutoff, translational_invariant, backend)
    return float(abs(np.trace(W)))


__all__ = [
    "IntegrationError",
    "NoiseModel",
    "Trajectory",
    "check_density_matrix",
    "check_state",
    "dephasing_diagonal",
    "evolve_lindblad",
    "evolve_unitary",
    "loop_map_protocol",
    "p0",
    "prepare_state",
    "reconstruct_loop_map",
    "site_populations",
    "thermal_density_matrix",
    "thermal_weights",
    "wilson_loop_protocol",
]
