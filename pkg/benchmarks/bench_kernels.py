"""Compare the compiled and numpy Lindblad right-hand sides.

    python benchmarks/bench_kernels.py [--repeat 200] [--cutoff 8]

Reports the per-call cost of one RHS evaluation for each available backend,
the speedup, and the wall time of a full 0.5 ms noisy trajectory.
"""
import argparse
import time
import timeit

import numpy as np

from abcage import kernels
from abcage.dynamics import NoiseModel, evolve_lindblad, lindblad_rhs, thermal_density_matrix
from abcage.gauge import PSI_OUT, nonabelian_fig2
from abcage.lattice import LatticeConfig, add_detuning, build_hamiltonian


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200, help="RHS calls per timing")
    ap.add_argument("--cutoff", type=int, default=8)
    args = ap.parse_args(argv)

    cfg = LatticeConfig(nonabelian_fig2(), cutoff=args.cutoff)
    noise = NoiseModel()
    H = add_detuning(build_hamiltonian(cfg), noise.detuning)
    rho = thermal_density_matrix("A", 0, PSI_OUT, cfg, 0.3)
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    print(f"dimension {cfg.dim}, default backend: {kernels.BACKEND}")

    per_call = {}
    outputs = {}
    for b in backends:
        rhs = lindblad_rhs(H, noise, b)
        outputs[b] = rhs.apply(rho)
        best = min(timeit.repeat(lambda: rhs.apply(rho), number=args.repeat, repeat=5))
        per_call[b] = best / args.repeat
        print(f"{b:>7} rhs: {per_call[b] * 1e6:9.1f} us/call")
    if len(backends) == 2:
        diff = np.abs(outputs["python"] - outputs["cython"]).max()
        print(f"speedup: {per_call['python'] / per_call['cython']:.2f}x  (max |difference| {diff:.1e})")

    times = np.linspace(0, 0.5, 101)
    for b in backends:
        t0 = time.perf_counter()
        traj = evolve_lindblad(build_hamiltonian(cfg), rho, noise, times, backend=b)
        dt = time.perf_counter() - t0
        print(f"{b:>7} trajectory: {dt:6.3f} s  ({traj.diagnostics['nfev']} rhs calls)")


if __name__ == "__main__":
    main()
