#!/usr/bin/env python3
"""Benchmark the jitted mean-field kernels against the pure-Python fallback.

Runs each workload in-process (numba path unless RABICAT_DISABLE_NUMBA=1 is
already set), then re-executes itself in a subprocess with the fallback
selected by the environment flag and prints a side-by-side table.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--json]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workloads():
    from rabicat import _kernels

    axis = np.linspace(-3.0, 3.0, 41)
    sx, sy = np.meshgrid(axis, axis)
    seeds = np.column_stack([sx.ravel(), sy.ravel()])
    samples_short = np.linspace(0.0, 1e4, 64)
    samples_full = np.linspace(0.0, 500.0, 64)
    state0 = np.array([1.0, 0.0, 0.0, 0.0, -1.0])

    def reduced_trajectory():
        return _kernels.rk45_reduced(
            1.0, 0.0, 0.6, 0.25, samples_short, 1e-9, 1e-11, -1.0, 10**8
        )[7]

    def full_trajectory():
        return _kernels.rk45_full(
            state0, 0.6, 0.25, 10.0, samples_full, 1e-9, 1e-11, -1.0, True, 10**8
        )[5]

    def newton_grid():
        out = _kernels.newton_grid(1.5, 1.0, seeds, 100, 1e-12, 1e-11)
        return int(out[:, 3].sum())

    def lyapunov_scan():
        return _kernels.lyapunov_scan(0.7, 0.4, 2.0, 501)[0]

    return [
        ("reduced trajectory to t=1e4", reduced_trajectory),
        ("coupled spin trajectory to t=500", full_trajectory),
        ("fixed-point Newton grid 41x41", newton_grid),
        ("Lyapunov scan 501x501", lyapunov_scan),
    ]


def measure(repeat):
    results = {}
    for name, fn in workloads():
        fn()  # warm-up / JIT compile
        best = min(_timed(fn) for _ in range(repeat))
        results[name] = best
    return results


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print raw timings only")
    args = ap.parse_args()

    from rabicat._accel import NUMBA_ENABLED

    mine = measure(args.repeat)
    if args.json:
        print(json.dumps({"numba": NUMBA_ENABLED, "timings": mine}))
        return

    if not NUMBA_ENABLED:
        print("numba disabled in this process; nothing to compare against")
        for name, t in mine.items():
            print(f"  {name:36s} {t * 1e3:10.2f} ms")
        return

    env = dict(os.environ, RABICAT_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--repeat", str(args.repeat), "--json"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    fallback = json.loads(out.stdout)["timings"]

    print(f"{'workload':36s} {'numba':>12s} {'numpy/py':>12s} {'speedup':>9s}")
    for name, t_jit in mine.items():
        t_py = fallback[name]
        print(f"{name:36s} {t_jit * 1e3:10.2f} ms {t_py * 1e3:10.2f} ms {t_py / t_jit:8.1f}x")


if __name__ == "__main__":
    main()
