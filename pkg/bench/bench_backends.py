#!/usr/bin/env python3
"""Benchmark the numba-jitted kernels against the pure-numpy fallback.

Runs the same workloads in two subprocesses, one per FREEPROB_BACKEND value,
and prints wall times and the speedup.  JIT compilation is excluded by a
warm-up pass inside each worker.

    python3 bench/bench_backends.py [--grid 384] [--points 64] [--reps 3]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

WORKLOADS = ("cauchy_strip", "convolve_column", "analytic_density")


def _run_workloads(grid: int, points: int, reps: int):
    sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
    import numpy as np

    from freeprob import _kernels, freeconv, measures

    sc = measures.make_named("semicircle", grid_size=grid)
    bern = measures.make_named("bernoulli")

    def cauchy_strip():
        zs = np.linspace(-2.5, 2.5, 40 * points) + 1e-4j
        acc = 0.0 + 0.0j
        for z in zs:
            acc += measures.cauchy(sc, complex(z))
        return acc

    def convolve_column():
        acc = 0.0 + 0.0j
        for x in np.linspace(-1.8, 1.8, points):
            acc += freeconv.convolved_cauchy(sc, bern, complex(x, 1e-3))
        return acc

    def analytic_density():
        res = freeconv.free_convolve_analytic(bern, bern, grid_size=grid)
        return res.diagnostics[1]

    runners = {
        "cauchy_strip": cauchy_strip,
        "convolve_column": convolve_column,
        "analytic_density": analytic_density,
    }
    for name in WORKLOADS:
        fn = runners[name]
        fn()  # warm-up: triggers JIT compilation on the numba backend
        best = float("inf")
        for _ in range(reps):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        print(f"{name} {best:.6f}", flush=True)
    print(f"backend {_kernels.BACKEND}", flush=True)


def _worker_main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--grid", type=int, required=True)
    ap.add_argument("--points", type=int, required=True)
    ap.add_argument("--reps", type=int, required=True)
    ap.add_argument("--worker", action="store_true")
    args = ap.parse_args()
    _run_workloads(args.grid, args.points, args.reps)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=384, help="density grid size")
    ap.add_argument("--points", type=int, default=64, help="continuation columns")
    ap.add_argument("--reps", type=int, default=3, help="timed repetitions (min taken)")
    args = ap.parse_args()

    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, FREEPROB_BACKEND=backend)
        cmd = [
            sys.executable, os.path.abspath(__file__), "--worker",
            "--grid", str(args.grid), "--points", str(args.points),
            "--reps", str(args.reps),
        ]
        print(f"[{backend}] running ...", flush=True)
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            if backend == "numba":
                print(f"[{backend}] unavailable, skipping:\n{proc.stderr.strip()[-400:]}")
                continue
            print(proc.stderr, file=sys.stderr)
            raise SystemExit(1)
        times = {}
        for line in proc.stdout.splitlines():
            key, _, val = line.partition(" ")
            if key in WORKLOADS:
                times[key] = float(val)
            elif key == "backend" and val.strip() != backend:
                print(f"[{backend}] resolved to {val.strip()} (numba missing?)")
        results[backend] = times

    if "numba" not in results:
        print("\nonly the numpy backend ran; nothing to compare")
        for name in WORKLOADS:
            print(f"  {name:20s} numpy {results['numpy'][name]:8.4f}s")
        return

    width = max(len(w) for w in WORKLOADS)
    print(f"\n{'workload':{width}s}  {'numba':>9s}  {'numpy':>9s}  {'speedup':>8s}")
    for name in WORKLOADS:
        tn = results["numba"][name]
        tp = results["numpy"][name]
        print(f"{name:{width}s}  {tn:8.4f}s  {tp:8.4f}s  {tp / tn:7.2f}x")


if __name__ == "__main__":
    if "--worker" in sys.argv:
        _worker_main()
    else:
        main()
