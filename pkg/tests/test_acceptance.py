"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py`` (a PASS/FAIL line per criterion is
printed in the terminal summary) or directly with ``python tests/test_acceptance.py``.
"""
import sys
import warnings
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
import pytest

from abcage import dynamics
from abcage.dynamics import (
    NoiseModel,
    evolve_lindblad,
    evolve_unitary,
    prepare_state,
    wilson_loop_protocol,
)
from abcage.experiments import cli, runner
from abcage.experiments.presets import PRESETS, preset
from abcage.experiments.runner import simulate, sweep
from abcage.gauge import (
    Plaquette,
    abelian_fig2,
    caging_order,
    classify_plaquette,
    interference_matrix,
    nonabelian_fig2,
    second_order_fig3,
    wilson_loop,
)
from abcage.lattice import build_hamiltonian
from abcage.tomography import (
    ConditioningWarning,
    PhononDistribution,
    SidebandDataset,
    SidebandModelParams,
    fit_phonon_populations,
    laguerre_gen,
    sideband_signal,
    synthesize_sideband_data,
)

J = 2 * np.pi * 2.5
TIMES = np.linspace(0.0, 0.5, 101)


def criterion(number, title):
    return pytest.mark.criterion(number, title)


# 1 ---------------------------------------------------------------------------

@criterion(1, "algebraic anchors: interference matrices and Wilson loops")
def test_criterion_01_algebraic_anchors():
    tol = 1e-12
    assert np.abs(interference_matrix(abelian_fig2())).max() <= tol
    assert np.abs(interference_matrix(nonabelian_fig2()) - 0.5 * np.array([[1, 1], [1, 1]])).max() <= tol
    assert np.abs(interference_matrix(second_order_fig3()) - 0.5 * np.array([[-1, -1], [1, 1]])).max() <= tol
    for ordering in ("main_text", "holonomy"):
        assert abs(wilson_loop(abelian_fig2(), ordering) - 2.0) <= tol
        assert abs(wilson_loop(nonabelian_fig2(), ordering) - 0.0) <= tol


# 2 ---------------------------------------------------------------------------

@criterion(2, "Wilson-loop protocol, ideal and with the noise model")
def test_criterion_02_wilson_protocol():
    assert abs(wilson_loop_protocol(abelian_fig2(), J) - 2.0) <= 1e-6
    assert abs(wilson_loop_protocol(nonabelian_fig2(), J) - 0.0) <= 1e-6
    noisy_ab = wilson_loop_protocol(abelian_fig2(), J, NoiseModel())
    noisy_na = wilson_loop_protocol(nonabelian_fig2(), J, NoiseModel())
    print(f"noisy protocol: abelian {noisy_ab:.4f}, non-abelian {noisy_na:.4f}")
    assert 1.6 <= noisy_ab <= 2.0
    assert 0.0 <= noisy_na <= 0.15


# 3 ---------------------------------------------------------------------------

def _ideal(name, ti):
    s = preset(name).ideal()
    return replace(s, lattice=replace(s.lattice, translational_invariant=ti))


def _rung_indices(rungs):
    return [6 * n + k for n in rungs for k in range(6)]


@criterion(3, "caging confinement suite, both sideband-factor settings")
@pytest.mark.parametrize("ti", [False, True], ids=["sqrt_n", "uniform"])
def test_criterion_03_confinement(ti):
    tol = 1e-8
    # (a) Abelian first order, both spinors used by the fig2 presets
    for name in ("fig2a", "fig2c"):
        traj = simulate(_ideal(name, ti), times=TIMES)
        assert traj.population_outside(_rung_indices([0])).max() < tol, name
    # (b) non-Abelian first order with the out-of-phase spinor
    traj = simulate(_ideal("fig2b", ti), times=TIMES)
    assert traj.population_outside(_rung_indices([0])).max() < tol
    # (c) second order: nothing beyond n = 1
    traj = simulate(_ideal("fig3b", ti), times=TIMES)
    assert traj.population_outside(_rung_indices([0, 1])).max() < tol
    # (d) asymmetric: A_0 and A_3 stay dark from an A_2 start
    traj = simulate(_ideal("fig3d", ti), times=TIMES)
    assert traj.site_population("A", 0).max() < tol
    assert traj.site_population("A", 3).max() < tol


# 4 ---------------------------------------------------------------------------

@criterion(4, "initial-state dependence of P0 at 0.15 ms")
def test_criterion_04_initial_state_dependence():
    na = sweep(preset("fig2f-nonabelian").ideal())
    phi, p = na.column("phi_rad"), na.column("P0")
    k = int(np.argmax(p))
    assert abs(phi[k] - np.pi) < 1e-12
    assert abs(p[k] - 1.0) <= 1e-8
    assert p[np.argmin(np.abs(phi))] < p[k] - 0.3
    ab = sweep(preset("fig2f-abelian").ideal())
    assert np.abs(ab.column("P0") - 1.0).max() <= 1e-8


# 5 ---------------------------------------------------------------------------

def first_local_maximum(times, values):
    for i in range(1, len(values) - 1):
        if values[i - 1] < values[i] >= values[i + 1]:
            return times[i]
    return None


@criterion(5, "asymmetric caging: first local maximum of A_1 population in [0.2, 0.4] ms")
def test_criterion_05_asymmetric_revival():
    traj = simulate(preset("fig3d").ideal(), times=TIMES)
    a1 = traj.site_population("A", 1)
    t_first = first_local_maximum(TIMES, a1)
    print(f"first local maximum of A_1 at {t_first} ms (population {a1[TIMES == t_first][0]:.3f}); "
          f"global maximum at {TIMES[np.argmax(a1)]} ms (population {a1.max():.3f})")
    assert t_first is not None
    assert 0.2 <= t_first <= 0.4


# 6 ---------------------------------------------------------------------------

@criterion(6, "interference preserved by non-Abelian links at phi = 0, t = 0.2 ms")
def test_criterion_06_su2_preservation():
    vals = {}
    for name in ("fig4-abelian", "fig4-nonabelian"):
        s = preset(name)
        pl = s.sweep.plaquette_at(s.lattice.plaquette, 0.0)
        vals[name] = simulate(s, plaquette=pl, times=[0.0, 0.2]).p0()[-1]
    print(f"P0(0.2 ms): abelian {vals['fig4-abelian']:.4f}, non-abelian {vals['fig4-nonabelian']:.4f}")
    assert vals["fig4-nonabelian"] - vals["fig4-abelian"] >= 0.2


# 7 ---------------------------------------------------------------------------

@contextmanager
def _record_lindblad(monkeypatch):
    seen = []
    original = dynamics.evolve_lindblad

    def recording(*args, **kwargs):
        traj = original(*args, **kwargs)
        seen.append(traj.diagnostics)
        return traj

    monkeypatch.setattr(dynamics, "evolve_lindblad", recording)
    monkeypatch.setattr(runner, "evolve_lindblad", recording)
    yield seen


@criterion(7, "open-system conservation across presets and the closed-system limit")
def test_criterion_07_conservation(monkeypatch):
    with _record_lindblad(monkeypatch) as seen:
        for name in PRESETS:
            runner.run_scenario(preset(name), workers=4)
    assert len(seen) > len(PRESETS)
    assert max(d["max_trace_drift"] for d in seen) < 1e-7
    assert max(d["max_hermiticity_drift"] for d in seen) < 1e-8
    assert min(d["min_eigenvalue"] for d in seen) >= -1e-6

    for name, s in PRESETS.items():
        if "kind" in s or "sweep" in s:
            continue
        sc = preset(name)
        H = build_hamiltonian(sc.lattice)
        psi = prepare_state(sc.initial.manifold, sc.initial.phonon, sc.initial.vector, sc.lattice)
        u = evolve_unitary(H, psi, TIMES)
        m = evolve_lindblad(H, np.outer(psi, psi.conj()), NoiseModel.none(), TIMES)
        assert np.abs(u.populations - m.populations).max() < 1e-6, name


# 8 ---------------------------------------------------------------------------

def _random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


@criterion(8, "Abelian-uniqueness theorem on 1000 random Abelian plaquettes")
def test_criterion_08_abelian_uniqueness():
    rng = np.random.default_rng(8)
    spinors = rng.normal(size=(100, 2)) + 1j * rng.normal(size=(100, 2))
    spinors /= np.linalg.norm(spinors, axis=1, keepdims=True)
    for k in range(1000):
        # half the draws sit exactly on theta = pi; the rest stay >= 0.1 away from it
        theta = np.pi if k % 2 == 0 else rng.uniform(-np.pi + 0.1, np.pi - 0.1)
        u1, u2, u3 = (_random_unitary(rng) for _ in range(3))
        u4 = np.exp(-1j * theta) * u2 @ u1 @ u3.conj().T
        p = Plaquette.from_matrices(u1, u2, u3, u4)
        c = classify_plaquette(p)
        assert c.abelian
        T = interference_matrix(p)
        orders = {caging_order(T, s, max_order=5) for s in spinors}
        if theta == np.pi:
            assert c.state_independent_caging and orders == {1}
        else:
            assert not c.state_independent_caging and orders == {None}


# 9 ---------------------------------------------------------------------------

@criterion(9, "tomography round trip and Laguerre closed forms")
def test_criterion_09_tomography():
    x = np.random.default_rng(9).uniform(0, 4, 1000)
    closed = [np.ones_like(x), 2 - x, 3 - 3 * x + x**2 / 2, 4 - 6 * x + 2 * x**2 - x**3 / 6]
    for n, ref in enumerate(closed):
        assert np.abs(laguerre_gen(n, 1, x) - ref).max() <= 1e-12

    params = SidebandModelParams.from_sideband_rabi(2 * np.pi * 5.0, 0.092, 7)
    period = 2 * np.pi / params.frequencies()[0]

    for dist in (PhononDistribution([0.9, 0.1]), PhononDistribution.thermal(0.2, 7)):
        t = np.linspace(0, 3 * period, 60)
        data = SidebandDataset(t, sideband_signal(dist, params, t), np.ones(t.size, dtype=int))
        assert np.abs(fit_phonon_populations(data, params).p - dist.padded(7)).max() <= 1e-6

    dist = PhononDistribution.thermal(0.2, 7)
    t = np.linspace(0, 4 * period, 101)
    errors = []
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConditioningWarning)
        for seed in range(100):
            fit = fit_phonon_populations(synthesize_sideband_data(dist, params, t, 400, seed), params)
            errors.append(np.abs(fit.p - dist.p).sum())
    q95 = float(np.percentile(errors, 95))
    print(f"400-shot L1 error, 95th percentile over 100 seeds: {q95:.4f}")
    assert q95 < 0.05


# 10 --------------------------------------------------------------------------

@criterion(10, "byte-identical CSV on repeated and concurrent runs")
def test_criterion_10_determinism(tmp_path):
    outputs = []
    for k, workers in enumerate(("1", "4", "4")):
        out = tmp_path / f"sweep{k}.csv"
        assert cli.main(["sweep", "fig4", "--workers", workers, "--out", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]

    traj = [tmp_path / f"sim{k}.csv" for k in range(2)]
    for path in traj:
        assert cli.main(["sim", "fig2d", "--out", str(path)]) == 0
    assert traj[0].read_bytes() == traj[1].read_bytes()

    data = [tmp_path / f"tomo{k}.csv" for k in range(2)]
    for path in data:
        assert cli.main(["tomo-synth", "--thermal", "0.2", "--seed", "42", "--out", str(path)]) == 0
    assert data[0].read_bytes() == data[1].read_bytes()
    fits = [tmp_path / f"fit{k}.csv" for k in range(2)]
    for path in fits:
        assert cli.main(["tomo-fit", str(data[0]), "--out", str(path)]) == 0
    assert fits[0].read_bytes() == fits[1].read_bytes()


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
