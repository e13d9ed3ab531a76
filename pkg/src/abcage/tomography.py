"""Blue-sideband phonon-number tomography.

The bright-state probability after a blue-sideband pulse of length t is

    P(t) = 1/2 sum_n p(n) [1 + cos(w_n t)],
    w_n  = Omega * exp(-eta^2/2) / sqrt(n+1) * eta * L_n^1(eta^2),

taken verbatim, including the 1/sqrt(n+1) arrangement. Given Omega*eta,
the model is linear in p(n), so the fit is a bounded least-squares problem
with a global optimum.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize, nnls

ETA_DEFAULT = 0.092
N_MAX_DEFAULT = 7
CONDITION_WARN = 1e8


class FitError(RuntimeError):
    """The constrained least-squares solve did not converge."""


class ConditioningWarning(UserWarning):
    """The sampled times cannot separate the sideband frequencies."""


def laguerre_gen(n: int, alpha, x):
    """Generalized Laguerre polynomial L_n^alpha(x) by three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur if np.ndim(cur) else float(cur)


@dataclass(frozen=True)
class SidebandModelParams:
    omega: float
    eta: float = ETA_DEFAULT
    n_max: int = N_MAX_DEFAULT
    # optional global decay rate (1/ms) of the cosine terms; off by default
    decay: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError("n_max must be an integer >= 1")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")

    @classmethod
    def from_sideband_rabi(cls, omega_eta: float, eta: float = ETA_DEFAULT, n_max: int = N_MAX_DEFAULT, decay: float = 0.0):
        """Build from the calibrated sideband Rabi frequency Omega*eta."""
        return cls(omega_eta / eta, eta, n_max, decay)

    @property
    def omega_eta(self) -> float:
        return self.omega * self.eta

    def frequencies(self, n_max: Optional[int] = None) -> np.ndarray:
        top = self.n_max if n_max is None else n_max
        n = np.arange(top + 1)
        x = self.eta**2
        lag = np.array([laguerre_gen(k, 1, x) for k in n])
        return self.omega * np.exp(-x / 2) / np.sqrt(n + 1) * self.eta * lag


@dataclass(frozen=True)
class PhononDistribution:
    """p(n) for n = 0..len(p)-1. Mass beyond the last bin is left unassigned."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float).reshape(-1)
        if p.size == 0:
            raise ValueError("empty distribution")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ValueError("p(n) must lie in [0, 1]")
        if p.sum() > 1 + 1e-9:
            raise ValueError(f"total probability {p.sum()} exceeds 1")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def thermal(cls, nbar: float, n_max: int) -> "PhononDistribution":
        n = np.arange(n_max + 1)
        w = nbar**n / (1 + nbar) ** (n + 1)
        return cls(w / w.sum())

    @classmethod
    def from_dict(cls, mapping: dict) -> "PhononDistribution":
        top = max(mapping)
        p = np.zeros(top + 1)
        for n, v in mapping.items():
            p[n] = v
        return cls(p)

    def padded(self, n_max: int) -> np.ndarray:
        out = np.zeros(n_max + 1)
        k = min(n_max + 1, self.p.size)
        out[:k] = self.p[:k]
        return out


@dataclass(frozen=True)
class SidebandDataset:
    times: np.ndarray
    bright_probability: np.ndarray
    shots: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        y = np.asarray(self.bright_probability, dtype=float).reshape(-1)
        s = np.broadcast_to(np.asarray(self.shots, dtype=np.int64), t.shape).copy()
        if y.shape != t.shape:
            raise ValueError("times and bright_probability differ in length")
        if np.any(s < 1):
            raise ValueError("shots must be >= 1")
        if np.any((y < 0) | (y > 1)):
            raise ValueError("bright_probability must lie in [0, 1]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "bright_probability", y)
        object.__setattr__(self, "shots", s)

    def __len__(self):
        return self.times.size

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_ms", "bright_probability", "shots"])
        for t, y, s in zip(self.times, self.bright_probability, self.shots):
            # shortest repr, so a dataset survives a file round trip exactly
            w.writerow([repr(float(t)), repr(float(y)), int(s)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "SidebandDataset":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: no data rows")
        missing = {"time_ms", "bright_probability", "shots"} - set(rows[0])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return cls(
            [float(r["time_ms"]) for r in rows],
            [float(r["bright_probability"]) for r in rows],
            [int(r["shots"]) for r in rows],
        )


def design_matrix(params: SidebandModelParams, times, n_max: Optional[int] = None) -> np.ndarray:
    """Column n is the bright-state signal of a pure |n> state."""
    t = np.asarray(times, dtype=float).reshape(-1)
    w = params.frequencies(n_max)
    osc = np.cos(np.outer(t, w))
    if params.decay:
        osc *= np.exp(-params.decay * t)[:, None]
    return 0.5 * (1.0 + osc)


def sideband_signal(dist: PhononDistribution, params: SidebandModelParams, times) -> np.ndarray:
    p = np.asarray(dist.p if isinstance(dist, PhononDistribution) else dist, dtype=float)
    return design_matrix(params, times, p.size - 1) @ p


def synthesize_sideband_data(dist, params: SidebandModelParams, times, shots: int, seed: int) -> SidebandDataset:
    """Binomial shot-noise draws around the model curve."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    prob = np.clip(sideband_signal(dist, params, times), 0.0, 1.0)
    rng = np.random.default_rng(seed)
    counts = rng.binomial(int(shots), prob)
    return SidebandDataset(np.asarray(times, dtype=float), counts / shots, np.full(prob.shape, shots))


@dataclass
class FitResult:
    distribution: PhononDistribution
    uncertainty: np.ndarray
    one_sided: np.ndarray
    residual_norm: float
    condition_number: float
    notes: list = field(default_factory=list)

    @property
    def p(self) -> np.ndarray:
        return self.distribution.p

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "p", "uncertainty", "one_sided"])
        for n, (pv, sv, one) in enumerate(zip(self.p, self.uncertainty, self.one_sided)):
            w.writerow([n, format(pv, ".10g"), format(sv, ".6g"), int(one)])
        w.writerow([])
        w.writerow(["residual_norm", format(self.residual_norm, ".10g")])
        w.writerow(["condition_number", format(self.condition_number, ".6g")])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def _simplex_lsq(A: np.ndarray, b: np.ndarray, starts: int = 5, seed: int = 0) -> np.ndarray:
    """min ||A p - b|| over p >= 0, sum p <= 1.

    Non-negative least squares first; only when its solution overshoots the
    total-probability bound is the sum constraint activated, with a few
    seeded Dirichlet starts for SLSQP.
    """
    p, _ = nnls(A, b, maxiter=50 * A.shape[1])
    if p.sum() <= 1.0 + 1e-12:
        return p

    k = A.shape[1]
    AtA, Atb = A.T @ A, A.T @ b

    def obj(x):
        r = A @ x - b
        return 0.5 * r @ r, AtA @ x - Atb

    cons = [{"type": "ineq", "fun": lambda x: 1.0 - x.sum(), "jac": lambda x: -np.ones(k)}]
    rng = np.random.default_rng(seed)
    inits = [p / p.sum()] + [rng.dirichlet(np.ones(k)) for _ in range(starts)]
    best = None
    for x0 in inits:
        res = minimize(obj, x0, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * k,
                       constraints=cons, options={"ftol": 1e-16, "maxiter": 1000})
        if res.success and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise FitError("constrained least squares did not converge")
    x = np.clip(best.x, 0.0, 1.0)
    return x / max(1.0, x.sum())


def fit_phonon_populations(data: SidebandDataset, params: SidebandModelParams, active_tol: float = 1e-10) -> FitResult:
    """Recover p(0..n_max) with Omega*eta held fixed.

    Uncertainties are the square roots of the linear-model covariance
    s^2 (A_F^T A_F)^-1 restricted to bins off the p = 0 boundary; bins pinned
    at zero get a one-sided bound from the full covariance instead.
    """
    k = params.n_max + 1
    if len(data) < k:
        raise ValueError(f"need at least {k} points to fit {k} populations, got {len(data)}")
    A = design_matrix(params, data.times)
    b = data.bright_probability
    cond = float(np.linalg.cond(A))
    notes = []
    if not np.isfinite(cond) or cond > CONDITION_WARN:
        msg = f"design matrix condition number {cond:.3g}: times too short to resolve n <= {params.n_max}"
        warnings.warn(msg, ConditioningWarning, stacklevel=2)
        notes.append(msg)

    p = _simplex_lsq(A, b)
    resid = A @ p - b
    rss = float(resid @ resid)
    free = p > active_tol
    dof = max(len(b) - int(free.sum()), 1)
    s2 = rss / dof

    sigma = np.zeros(k)
    if free.any():
        Af = A[:, free]
        sigma[free] = np.sqrt(np.clip(np.diag(s2 * np.linalg.pinv(Af.T @ Af)), 0, None))
    if (~free).any():
        full = np.sqrt(np.clip(np.diag(s2 * np.linalg.pinv(A.T @ A)), 0, None))
        sigma[~free] = full[~free]
    return FitResult(PhononDistribution(p), sigma, ~free, float(np.sqrt(rss)), cond, notes)
