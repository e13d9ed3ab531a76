"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from .. import kernels
from ..dynamics import IntegrationError
from ..gauge import caging_order, classify_plaquette, interference_matrix, wilson_loop
from ..lattice import build_hamiltonian, save_matrix
from ..tomography import (
    ETA_DEFAULT,
    N_MAX_DEFAULT,
    FitError,
    PhononDistribution,
    SidebandDataset,
    SidebandModelParams,
    design_matrix,
    fit_phonon_populations,
    synthesize_sideband_data,
)
from . import svg
from .config import ConfigError, Scenario, load_scenario
from .presets import describe
from .runner import (
    NumericalError,
    ResultTable,
    combine,
    resolve,
    simulate,
    sweep,
    trajectory_table,
    wilson_table,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
OMEGA_ETA_DEFAULT = 2 * np.pi * 5.0


def load(arg: str, ideal: bool = False) -> list[Scenario]:
    if os.path.exists(arg):
        scenarios = [load_scenario(arg)]
    else:
        try:
            scenarios = resolve(arg)
        except KeyError:
            raise ConfigError(f"{arg!r} is neither a config file nor a preset; see 'abcage presets'") from None
    if ideal:
        scenarios = [s.ideal() for s in scenarios]
    return scenarios


def _emit(table: ResultTable, out) -> None:
    text = table.to_csv(out)
    if out is None:
        sys.stdout.write(text)
    else:
        print(f"wrote {out} ({len(table.rows)} rows)", file=sys.stderr)


def cmd_presets(args) -> int:
    width = max(len(n) for n, _ in describe())
    for name, desc in describe():
        print(f"{name:<{width}}  {desc}")
    return EXIT_OK


def cmd_sim(args) -> int:
    named = []
    for s in load(args.config, args.ideal):
        if s.kind != "trajectory":
            s = replace(s, kind="trajectory", sweep=None)
        named.append((s.name, trajectory_table(simulate(s))))
    table = combine(named)
    _emit(table, args.out)
    if args.plot:
        traj = named[0][1].extras["trajectory"]
        series = {"P0": traj.p0()}
        for n in range(min(4, traj.cutoff + 1)):
            series[f"rung n={n}"] = traj.rung_population(n)
        svg.write(args.plot, svg.line_plot(traj.times, series, "t (ms)", "population", named[0][0], (0.0, 1.0)))
    return EXIT_OK


def cmd_sweep(args) -> int:
    named = []
    for s in load(args.config, args.ideal):
        if s.sweep is None:
            raise ConfigError(f"scenario {s.name!r} has no sweep block")
        named.append((s.name, sweep(s, args.workers)))
    _emit(combine(named), args.out)
    if args.plot:
        if len(named) == 1:
            ex = named[0][1].extras
            doc = svg.heatmap(ex["times"], ex["values"] / np.pi, ex["p0_series"],
                              "t (ms)", "phase / pi", f"P0, {named[0][0]}")
        else:
            x = named[0][1].column("phi_pi")
            doc = svg.line_plot(x, {n: t.column("P0") for n, t in named}, "phase / pi", "P0", args.config, (0.0, 1.0))
        svg.write(args.plot, doc)
    return EXIT_OK


def cmd_wilson(args) -> int:
    named = [(s.name, wilson_table(s)) for s in load(args.config, args.ideal)]
    table = combine(named)
    _emit(table, args.out)
    return EXIT_OK


def cmd_caging(args) -> int:
    cols = ["scenario", "wilson_main_text", "wilson_holonomy", "T", "abelian", "theta",
            "state_independent_caging", "rightward_order", "leftward_order"]
    rows = []
    for s in load(args.config, args.ideal):
        pl = s.lattice.plaquette
        T = interference_matrix(pl)
        c = classify_plaquette(pl)
        psi = s.initial.vector
        right = caging_order(T, psi, "rightward", args.max_order)
        left = caging_order(T, psi, "leftward", args.max_order)
        t_text = ";".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in T.reshape(-1))
        rows.append([s.name, wilson_loop(pl, "main_text"), wilson_loop(pl, "holonomy"), t_text,
                     c.abelian, c.theta, c.state_independent_caging,
                     "none" if right is None else right, "none" if left is None else left])
    _emit(ResultTable(cols, rows), args.out)
    return EXIT_OK


def cmd_hamiltonian(args) -> int:
    s = load(args.config)[0]
    H = build_hamiltonian(s.lattice)
    if args.out:
        save_matrix(args.out, H)
    else:
        from ..lattice import format_matrix

        sys.stdout.write(format_matrix(H))
    return EXIT_OK


def _params(args) -> SidebandModelParams:
    try:
        return SidebandModelParams.from_sideband_rabi(args.omega_eta, args.eta, args.n_max)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def cmd_tomo_synth(args) -> int:
    params = _params(args)
    if args.thermal is not None:
        dist = PhononDistribution.thermal(args.thermal, args.n_max)
    else:
        try:
            dist = PhononDistribution(_parse_floats(args.dist, "--dist"))
        except ValueError as exc:
            raise ConfigError(f"--dist: {exc}") from None
    if args.times:
        t = _parse_floats(args.times, "--times")
        if len(t) != 3:
            raise ConfigError("--times takes start,stop,num")
        times = np.linspace(t[0], t[1], int(t[2]))
    else:
        period = 2 * np.pi / params.frequencies()[0]
        times = np.linspace(0.0, 4 * period, 101)
    if args.shots < 1:
        raise ConfigError("--shots must be >= 1")
    data = synthesize_sideband_data(dist, params, times, args.shots, args.seed)
    text = data.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_tomo_fit(args) -> int:
    params = _params(args)
    try:
        data = SidebandDataset.from_csv(args.data)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from None
    try:
        result = fit_phonon_populations(data, params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    text = result.to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    if args.plot:
        fine = np.linspace(data.times.min(), data.times.max(), 400)
        model = design_matrix(params, fine) @ result.p
        doc = svg.line_plot(fine, {"fit": model}, "t (ms)", "bright probability", "sideband fit", (0.0, 1.0))
        pts = svg._Frame((float(fine.min()), float(fine.max())), (0.0, 1.0))
        dots = "\n".join(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="black"/>'
                         for x, y in zip(pts.px(data.times), pts.py(data.bright_probability)))
        svg.write(args.plot, doc.replace("</svg>", dots + "\n</svg>"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--plot", help="SVG output path")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--ideal", action="store_true", help="disable the noise model")
    common.add_argument("--workers", type=int, default=None, help="max concurrent sweep points")

    parser = argparse.ArgumentParser(prog="abcage", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 (kernel: {kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("presets", parents=[common], help="list built-in scenarios").set_defaults(func=cmd_presets)
    for name, func, helptext in [
        ("sim", cmd_sim, "time evolution of a scenario"),
        ("sweep", cmd_sweep, "initial- or coupling-phase sweep"),
        ("wilson", cmd_wilson, "algebraic and protocol Wilson loops"),
        ("caging", cmd_caging, "plaquette classification and caging orders"),
        ("hamiltonian", cmd_hamiltonian, "export the lattice Hamiltonian as re,im text"),
    ]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("config", help="YAML scenario file, preset name or preset group")
        if name == "caging":
            p.add_argument("--max-order", type=int, default=10)
        p.set_defaults(func=func)

    tomo = argparse.ArgumentParser(add_help=False)
    tomo.add_argument("--omega-eta", type=float, default=OMEGA_ETA_DEFAULT,
                      help="sideband Rabi frequency Omega*eta in rad/ms")
    tomo.add_argument("--eta", type=float, default=ETA_DEFAULT)
    tomo.add_argument("--n-max", type=int, default=N_MAX_DEFAULT)

    p = sub.add_parser("tomo-synth", parents=[common, tomo], help="synthesize a blue-sideband dataset")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--dist", default="1", help="comma-separated p(0),p(1),...")
    g.add_argument("--thermal", type=float, default=None, help="thermal mean phonon number")
    p.add_argument("--times", help="start,stop,num in ms (default: 101 points over 4 n=0 periods)")
    p.add_argument("--shots", type=int, default=400)
    p.set_defaults(func=cmd_tomo_synth)

    p = sub.add_parser("tomo-fit", parents=[common, tomo], help="fit phonon populations to a dataset CSV")
    p.add_argument("data", help="CSV with time_ms,bright_probability,shots")
    p.set_defaults(func=cmd_tomo_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, IntegrationError, FitError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
