"""Scenario execution: trajectories, phase sweeps and loop measurements."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..dynamics import (
    IntegrationError,
    Trajectory,
    evolve_lindblad,
    evolve_unitary,
    prepare_state,
    thermal_density_matrix,
    wilson_loop_protocol,
)
from ..gauge import classify_plaquette, interference_matrix, phase_spinor, wilson_loop
from ..lattice import build_hamiltonian
from .config import Scenario
from .presets import GROUPS, PRESETS, preset

# conservation limits checked after every run
TRACE_LIMIT = 1e-7
HERMITICITY_LIMIT = 1e-8
EIGENVALUE_FLOOR = -1e-6
PROBABILITY_SLACK = 1e-9


class NumericalError(RuntimeError):
    """A run violated a conservation invariant."""


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    v = float(x)
    if v == 0.0:
        v = 0.0  # drop the sign of -0.0
    return format(v, ".12g")


@dataclass
class ResultTable:
    columns: list
    rows: list
    probability_columns: frozenset = frozenset()
    # non-CSV data for plots, e.g. P0(t) per sweep value
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        idx = [i for i, c in enumerate(self.columns) if c in self.probability_columns]
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row length does not match columns")
            for i in idx:
                v = row[i]
                if not (-PROBABILITY_SLACK <= v <= 1 + PROBABILITY_SLACK):
                    raise NumericalError(f"{self.columns[i]} = {v} outside [0, 1]")

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def check_trajectory(traj: Trajectory, name: str = "") -> None:
    """Raise NumericalError if a run broke norm/trace, Hermiticity or positivity."""
    diag = traj.diagnostics
    label = f"{name}: " if name else ""
    if traj.mixed:
        if diag["max_trace_drift"] > TRACE_LIMIT:
            raise NumericalError(f"{label}trace drift {diag['max_trace_drift']:.3e} exceeds {TRACE_LIMIT}")
        if diag["max_hermiticity_drift"] > HERMITICITY_LIMIT:
            raise NumericalError(f"{label}Hermiticity drift {diag['max_hermiticity_drift']:.3e}")
        if diag["min_eigenvalue"] < EIGENVALUE_FLOOR:
            raise NumericalError(f"{label}negative eigenvalue {diag['min_eigenvalue']:.3e}")
    else:
        norms = np.linalg.norm(traj.states, axis=1)
        drift = float(np.abs(norms - 1).max())
        if drift > 1e-10:
            raise NumericalError(f"{label}norm drift {drift:.3e}")


def _with_time(times: np.ndarray, t: float) -> tuple[np.ndarray, int]:
    grid = np.union1d(times, [t])
    return grid, int(np.searchsorted(grid, t))


def simulate(s: Scenario, spinor=None, plaquette=None, times=None) -> Trajectory:
    """Propagate one scenario, unitary when ideal and Lindblad otherwise."""
    lattice = s.lattice if plaquette is None else replace(s.lattice, plaquette=plaquette)
    H = build_hamiltonian(lattice)
    sp = s.initial.vector if spinor is None else np.asarray(spinor, dtype=complex)
    t = s.time_grid if times is None else np.asarray(times, dtype=float)
    try:
        if s.noise is None:
            traj = evolve_unitary(H, prepare_state(s.initial.manifold, s.initial.phonon, sp, lattice), t)
        else:
            rho0 = thermal_density_matrix(s.initial.manifold, s.initial.phonon, sp, lattice, s.noise.initial_nbar)
            traj = evolve_lindblad(H, rho0, s.noise, t)
    except IntegrationError as exc:
        raise NumericalError(f"{s.name}: {exc}") from exc
    except ArithmeticError as exc:
        raise NumericalError(f"{s.name}: {exc}") from exc
    check_trajectory(traj, s.name)
    return traj


def trajectory_table(traj: Trajectory) -> ResultTable:
    cols = ["time_ms", *traj.labels, "P0"]
    pops = traj.populations
    rows = [[float(t), *map(float, row), float(q)] for t, row, q in zip(traj.times, pops, traj.p0())]
    return ResultTable(cols, rows, frozenset(cols[1:]), {"trajectory": traj})


def _sweep_point(s: Scenario, phi: float):
    sw = s.sweep
    grid, k = _with_time(s.time_grid, sw.observable_time)
    if sw.parameter == "initial_phase":
        traj = simulate(s, spinor=phase_spinor(phi), times=grid)
        pl = s.lattice.plaquette
    else:
        pl = sw.plaquette_at(s.lattice.plaquette, phi)
        traj = simulate(s, plaquette=pl, times=grid)
    p0_series = traj.p0()
    return phi, pl, float(p0_series[k]), grid, p0_series


def sweep(s: Scenario, workers: Optional[int] = None) -> ResultTable:
    """One row per sweep value, evaluated concurrently and assembled in input order."""
    if s.sweep is None:
        raise ValueError(f"scenario {s.name!r} has no sweep block")
    workers = default_workers() if workers is None else max(1, int(workers))
    values = list(s.sweep.values)
    if workers == 1:
        results = [_sweep_point(s, phi) for phi in values]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda phi: _sweep_point(s, phi), values))

    coupling = s.sweep.parameter == "coupling_phase"
    cols = ["phi_rad", "phi_pi", "P0"]
    if coupling:
        cols += ["wilson_main_text", "wilson_holonomy", "interference_norm",
                 "abelian_main_text", "theta_main_text", "abelian_holonomy", "theta_holonomy"]
    rows = []
    for phi, pl, p0_val, _, _ in results:
        row = [phi, phi / np.pi, p0_val]
        if coupling:
            cm = classify_plaquette(pl, ordering="main_text")
            ch = classify_plaquette(pl, ordering="holonomy")
            row += [
                wilson_loop(pl, "main_text"),
                wilson_loop(pl, "holonomy"),
                float(np.linalg.norm(interference_matrix(pl), 2)),
                cm.abelian, cm.theta, ch.abelian, ch.theta,
            ]
        rows.append(row)
    extras = {
        "times": results[0][3] if results else np.array([]),
        "p0_series": np.array([r[4] for r in results]),
        "values": np.array(values),
    }
    return ResultTable(cols, rows, frozenset({"P0"}), extras)


def wilson_table(s: Scenario) -> ResultTable:
    pl = s.lattice.plaquette
    c = classify_plaquette(pl)
    measured = wilson_loop_protocol(pl, s.lattice.J, s.noise, s.lattice.cutoff, s.lattice.translational_invariant)
    cols = ["scenario", "wilson_main_text", "wilson_holonomy", "wilson_protocol", "noise",
            "abelian", "theta", "state_independent_caging"]
    row = [s.name, wilson_loop(pl, "main_text"), wilson_loop(pl, "holonomy"), measured,
           s.noise is not None, c.abelian, c.theta, c.state_independent_caging]
    return ResultTable(cols, [row])


def run_scenario(s: Scenario, workers: Optional[int] = None) -> ResultTable:
    if s.kind == "sweep":
        return sweep(s, workers)
    if s.kind == "wilson":
        return wilson_table(s)
    return trajectory_table(simulate(s))


def resolve(name: str) -> list[Scenario]:
    """Preset or group name to the scenarios it stands for."""
    if name in GROUPS:
        return [preset(m) for m in GROUPS[name]]
    if name in PRESETS:
        return [preset(name)]
    raise KeyError(name)


def combine(named: list[tuple[str, ResultTable]]) -> ResultTable:
    """Stack tables from a preset group, prefixing a scenario column when needed."""
    if len(named) == 1:
        return named[0][1]
    first = named[0][1]
    if first.columns[0] == "scenario":
        cols = first.columns
        rows = [row for _, t in named for row in t.rows]
    else:
        cols = ["scenario", *first.columns]
        rows = [[name, *row] for name, t in named for row in t.rows]
    for _, t in named:
        if t.columns != first.columns:
            raise ValueError("cannot combine tables with different columns")
    return ResultTable(cols, rows, first.probability_columns,
                       {name: t.extras for name, t in named})
