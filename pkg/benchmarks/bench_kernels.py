#!/usr/bin/env python3
"""Benchmark: compiled simplex kernel vs the NumPy fallback.

Runs identical workloads through both backends and prints a table of
wall times and speedups.  Workloads cover the shapes that dominate the
solver: small dense LPs (oracle-sized), the recoverable MIP relaxation
at experiment scale, and a full branch-and-bound solve.

Usage: python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

import robrec._kernel as kernel
from robrec import _simplex_cy, _simplex_py  # noqa: F401  (probe at import)
from robrec import core_solvers, lp_kernel, mip_kernel
from robrec.problems import gen_random_assignment, gen_random_knapsack
from robrec.model import LinearConstraint


def random_lp(seed, m, n):
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    x0 = rng.uniform(0, 1, n)
    b = A @ x0 + rng.uniform(0, 1, m)
    rows = tuple(
        LinearConstraint({j: A[i, j] for j in range(n) if A[i, j]}, "<=", b[i])
        for i in range(m)
    )
    c = rng.uniform(-2, 2, n)
    return lp_kernel.LpModel("min", c, rows, np.zeros(n), np.ones(n))


def workload_small_lps(reps):
    models = [random_lp(s, 12, 14) for s in range(40)]
    def run():
        for _ in range(reps):
            for model in models:
                lp_kernel.lp_solve(model)
    return run


def workload_rec_lp(reps):
    inst = gen_random_knapsack(100, seed=5, alpha=0.5)
    model = core_solvers.recoverable_model(inst, inst.uncertainty.nominal)
    c, A, senses, b, lo, up = lp_kernel.model_arrays(model.lp)
    def run():
        for _ in range(reps):
            lp_kernel.solve_dense(c, A, senses, b, lo.copy(), up.copy())
    return run


def workload_assignment_mip(reps):
    inst = gen_random_assignment(8, seed=5, alpha=0.4)
    model = core_solvers.recoverable_model(inst, inst.uncertainty.peak)
    def run():
        for _ in range(reps):
            mip_kernel.mip_solve(model)
    return run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller repetition counts")
    args = ap.parse_args()

    try:
        from robrec import _simplex_cy as compiled
    except ImportError:
        print("compiled kernel not built (run: python setup.py build_ext --inplace)")
        return

    reps = 1 if args.quick else 3
    workloads = [
        ("40 small LPs x%d" % (reps * 5), workload_small_lps(reps * 5)),
        ("recoverable LP n=100 x%d" % reps, workload_rec_lp(reps)),
        ("assignment MIP m=8 x%d" % reps, workload_assignment_mip(reps)),
    ]

    backends = [("numpy", _simplex_py.simplex_run), ("cython", compiled.simplex_run)]
    print(f"{'workload':<28} {'numpy':>10} {'cython':>10} {'speedup':>9}")
    for name, work in workloads:
        times = {}
        for bname, fn in backends:
            kernel.simplex_run = fn
            t0 = time.perf_counter()
            work()
            times[bname] = time.perf_counter() - t0
        print(
            f"{name:<28} {times['numpy']:>9.3f}s {times['cython']:>9.3f}s "
            f"{times['numpy'] / times['cython']:>8.2f}x"
        )
    kernel.simplex_run = compiled.simplex_run


if __name__ == "__main__":
    main()
