import subprocess
import sys

import numpy as np
import pytest

from abcage.experiments import cli
from abcage.experiments.config import ConfigError, load_scenario, load_scenario_text, matrix_to_config, parse_yaml
from abcage.experiments.presets import GROUPS, PRESETS, describe, preset
from abcage.experiments.runner import (
    NumericalError,
    ResultTable,
    combine,
    resolve,
    run_scenario,
    simulate,
    sweep,
)
from abcage.gauge import SPIN_FLIP, abelian_fig2, nonabelian_fig2

GOOD = """\
name: custom
lattice:
  J_kHz: 2.5
  cutoff: 4
  links:
    u1: spin_flip
    u2: phase_down
    u3: phase_down
    u4: [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]
initial: {manifold: A, phonon: 0, phase_pi: 1}
times: {start: 0, stop: 0.2, num: 5}
noise: null
"""


# -- config -------------------------------------------------------------------

def test_load_good_config(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(GOOD)
    s = load_scenario(path)
    assert s.name == "custom" and s.kind == "trajectory" and s.noise is None
    assert s.lattice.plaquette == abelian_fig2()
    assert s.lattice.J == pytest.approx(2 * np.pi * 2.5)
    assert np.allclose(s.initial.vector, np.array([-1, 1]) / np.sqrt(2))
    assert len(s.times) == 5


@pytest.mark.parametrize(
    "bad,line,fragment",
    [
        (GOOD.replace("cutoff: 4", "cutof: 4"), 4, "unknown key 'cutof'"),
        (GOOD.replace("u2: phase_down", "u2: phase_sideways"), 7, "unknown link name"),
        (GOOD.replace("[[1, 0], [0, 0]]]", "[[2, 0], [0, 0]]]"), 9, "not unitary"),
        (GOOD.replace("phonon: 0", "phonon: 7"), 10, "outside 0..4"),
        (GOOD.replace("num: 5", "num: 0"), 11, "num must be >= 1"),
        (GOOD.replace("noise: null", "noise: {gamma1: -1}"), 12, "must be >= 0"),
        (GOOD.replace("cutoff: 4", "cutoff: 4.5"), 4, "expected an integer"),
        (GOOD + "sweep: {parameter: initial_phase, values: [0, 1], observable_time: 0.9}\n", 13, "outside the time grid"),
        (GOOD + "sweep: {parameter: coupling_phase, values: [0, 1], observable_time: 0.1}\n", 13, "phase_entries"),
        (GOOD + "kind: movie\n", 13, "expected one of"),
        ("name: x\nlattice: [1, 2]\n", 2, "expected a mapping"),
    ],
)
def test_config_errors_carry_line_numbers(bad, line, fragment):
    with pytest.raises(ConfigError) as info:
        load_scenario_text(bad, "s.yaml")
    assert info.value.line == line
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"s.yaml:{line}:")


def test_yaml_syntax_error_has_line():
    with pytest.raises(ConfigError) as info:
        load_scenario_text("name: x\nlattice: {cutoff: 4\ninitial: 3\n")
    assert info.value.line is not None


def test_spinor_must_be_normalized():
    with pytest.raises(ConfigError, match="norm"):
        load_scenario_text("initial: {spinor: [[1, 0], [1, 0]]}\n")


def test_preset_override():
    s = load_scenario_text("preset: fig2b\nlattice: {cutoff: 3}\nnoise: null\n")
    assert s.name == "fig2b"
    assert s.lattice.cutoff == 3 and s.noise is None
    assert s.lattice.plaquette == nonabelian_fig2()
    with pytest.raises(ConfigError, match="unknown preset"):
        load_scenario_text("preset: fig9\n")


def test_parse_yaml_line_map():
    data, lines = parse_yaml("a: 1\nb:\n  c: [1, 2]\n")
    assert data == {"a": 1, "b": {"c": [1, 2]}}
    assert lines[("b", "c")] == 3


def test_matrix_to_config_round_trip():
    text = "lattice: {links: {u1: %s}}\n" % matrix_to_config(SPIN_FLIP.matrix)
    assert load_scenario_text(text).lattice.plaquette.u1 == SPIN_FLIP


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_scenario("/nonexistent/s.yaml")


# -- presets ------------------------------------------------------------------

def test_all_presets_parse():
    for name in PRESETS:
        s = preset(name)
        assert s.name == name
        assert s.noise is not None
        assert len(s.times) == 101 and s.times[-1] == 0.5
    for group, members in GROUPS.items():
        assert [s.name for s in resolve(group)] == list(members)
    assert len(describe()) == len(PRESETS) + len(GROUPS)
    with pytest.raises(KeyError):
        resolve("fig7")


def test_fig2f_sweep_ideal():
    ab = sweep(preset("fig2f-abelian").ideal(), workers=2)
    assert np.abs(ab.column("P0") - 1).max() < 1e-8
    na = sweep(preset("fig2f-nonabelian").ideal(), workers=2)
    p = na.column("P0")
    phi = na.column("phi_rad")
    assert len(p) == 17
    k = int(np.argmax(p))
    assert phi[k] == pytest.approx(np.pi)
    assert p[k] == pytest.approx(1.0, abs=1e-8)
    assert np.sum(p > p[k] - 1e-12) == 1
    assert p[0] < 0.4


def test_fig4_sweep_classification_columns():
    t = sweep(preset("fig4-abelian").ideal(), workers=2)
    phi = t.column("phi_rad")
    assert np.allclose(t.column("wilson_main_text"), 2.0, atol=1e-12)
    assert np.allclose(t.column("wilson_holonomy"), 2 * np.abs(np.cos(phi)), atol=1e-12)
    assert all(t.column("abelian_main_text"))
    theta = t.column("theta_main_text")
    assert np.allclose(np.angle(np.exp(1j * (theta - phi))), 0, atol=1e-10)
    na = sweep(preset("fig4-nonabelian").ideal(), workers=2)
    assert np.allclose(na.column("wilson_main_text"), 0.0, atol=1e-12)


def test_wilson_preset_ideal():
    t = combine([(s.name, run_scenario(s)) for s in resolve("figS2")])
    rows = {r[0]: r for r in t.rows}
    i = t.columns.index("wilson_protocol")
    # the protocol values come from the noisy presets
    assert 1.6 <= rows["figS2-abelian"][i] <= 2.0
    assert 0.0 <= rows["figS2-nonabelian"][i] <= 0.15
    ideal = [run_scenario(s.ideal()) for s in resolve("figS2")]
    assert ideal[0].column("wilson_protocol")[0] == pytest.approx(2.0, abs=1e-6)
    assert ideal[1].column("wilson_protocol")[0] == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("name", ["fig2a", "fig2b", "fig2c"])
def test_noise_degrades_caged_presets(name):
    s = preset(name)
    if name == "fig2c":
        # Abelian links cage every spinor
        assert np.abs(simulate(s.ideal()).p0() - 1).max() < 1e-8
    ideal = simulate(s.ideal(), times=[0.0, 0.15]).p0()[-1]
    noisy = simulate(s, times=[0.0, 0.15]).p0()[-1]
    assert ideal == pytest.approx(1.0, abs=1e-8)
    assert 0 < ideal - noisy < 0.25


def test_result_table_rejects_bad_probability():
    with pytest.raises(NumericalError):
        ResultTable(["t", "P0"], [[0.0, 1.5]], frozenset({"P0"}))
    with pytest.raises(ValueError):
        ResultTable(["t", "P0"], [[0.0]])


# -- determinism --------------------------------------------------------------

def test_sweep_csv_independent_of_workers():
    s = preset("fig2f-nonabelian").ideal()
    serial = sweep(s, workers=1).to_csv()
    assert sweep(s, workers=4).to_csv() == serial
    assert sweep(s, workers=4).to_csv() == serial


def test_csv_formatting():
    t = ResultTable(["a", "b", "c"], [[-0.0, True, 1 / 3]])
    assert t.to_csv() == "a,b,c\n0,true,0.333333333333\n"


# -- CLI ----------------------------------------------------------------------

def test_cli_presets(capsys):
    assert cli.main(["presets"]) == 0
    assert "fig2f-nonabelian" in capsys.readouterr().out


def test_cli_sim_and_plot(tmp_path, capsys):
    cfg = tmp_path / "s.yaml"
    cfg.write_text(GOOD)
    out, plot = tmp_path / "o.csv", tmp_path / "o.svg"
    assert cli.main(["sim", str(cfg), "--out", str(out), "--plot", str(plot)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("time_ms,A_dn_0,A_up_0")
    assert len(lines) == 6
    assert plot.read_text().startswith("<svg")


def test_cli_sweep_group_stdout(capsys):
    assert cli.main(["sweep", "fig2f", "--ideal", "--workers", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "scenario,phi_rad,phi_pi,P0"
    assert len(lines) == 1 + 34


def test_cli_caging(capsys):
    assert cli.main(["caging", "fig3"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[1].endswith(",2,2") and rows[2].endswith(",1,2")


def test_cli_hamiltonian(tmp_path):
    from abcage.lattice import build_hamiltonian, load_matrix

    out = tmp_path / "h.txt"
    assert cli.main(["hamiltonian", "fig2b", "--out", str(out)]) == 0
    assert np.array_equal(load_matrix(out), build_hamiltonian(preset("fig2b").lattice))


def test_cli_tomography_pipeline(tmp_path, capsys):
    data, plot = tmp_path / "d.csv", tmp_path / "f.svg"
    assert cli.main(["tomo-synth", "--thermal", "0.2", "--seed", "3", "--out", str(data)]) == 0
    assert cli.main(["tomo-fit", str(data), "--plot", str(plot)]) == 0
    text = capsys.readouterr().out
    p = [float(line.split(",")[1]) for line in text.splitlines()[1:9]]
    assert abs(p[0] - 1 / 1.2) < 0.05
    assert plot.exists()


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["sim", "no-such-preset"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("lattice: {cutoff: -1}\n")
    assert cli.main(["sim", str(bad)]) == 2
    assert cli.main(["sweep", "fig2a"]) == 2
    assert cli.main(["tomo-synth", "--dist", "0.8,0.8"]) == 2
    assert cli.main(["tomo-synth", "--shots", "0"]) == 2
    assert cli.main(["tomo-fit", str(tmp_path / "missing.csv")]) == 2
    # more populations than data points cannot be fitted
    short = tmp_path / "short.csv"
    short.write_text("time_ms,bright_probability,shots\n0,1,10\n0.1,0.5,10\n")
    assert cli.main(["tomo-fit", str(short)]) == 2


def test_cli_numerical_failure_exit_code(monkeypatch, capsys):
    from abcage.experiments import runner

    def broken(*args, **kwargs):
        raise NumericalError("trace drift 1e-3")

    monkeypatch.setattr(cli, "simulate", broken)
    assert cli.main(["sim", "fig2a"]) == 3
    assert "numerical failure" in capsys.readouterr().err
    assert runner.TRACE_LIMIT == 1e-7


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "abcage", "presets"], capture_output=True, text=True)
    assert res.returncode == 0 and "figS2" in res.stdout
    res = subprocess.run([sys.executable, "-m", "abcage", "sim", "nope"], capture_output=True, text=True)
    assert res.returncode == 2
