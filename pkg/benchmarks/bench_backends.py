"""Throughput comparison of the numba and pure-numpy simulation kernels.

Runs the stopped-path engine and the snapshot engine on both backends with
identical counter-based random streams, reports steps/second, and checks
the results agree.

Usage:  python benchmarks/bench_backends.py [n_paths]
The AMBISTOP_BACKEND env var does not matter here; both are timed.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from ambistop._backend import USING_NUMBA
from ambistop.paths import run_snapshots, run_stopping


def bench(n_paths: int = 20_000) -> None:
    stop_args = dict(seed=7, n_paths=n_paths, logx0=0.0, z0=1.0, dt=1e-3,
                     n_steps=40_000, mu=0.0, sigma=0.5, kappa=0.5, gen_mode=0,
                     switch_z=27.99, stop_lo=-1.0, stop_hi=27.99)
    snap_args = dict(seed=7, n_paths=n_paths, logx0=0.0, z0=1.0, dt=1e-3,
                     ckpt_steps=np.array([1000], dtype=np.int64), mu=0.0,
                     sigma=0.5, kappa=0.5, gen_mode=1, switch_z=0.0)
    backends = ["numpy"] + (["numba"] if USING_NUMBA else [])
    results = {}
    for kind, args, steps_of in (
        ("stopping", stop_args, lambda out: int(out[4].sum())),
        ("snapshot", snap_args, lambda out: n_paths * 1000),
    ):
        runner = run_stopping if kind == "stopping" else run_snapshots
        for backend in backends:
            runner(backend=backend, **{**args, "n_paths": 32})  # warm up / jit
            t0 = time.perf_counter()
            out = runner(backend=backend, **args)
            dt_wall = time.perf_counter() - t0
            steps = steps_of(out)
            results[(kind, backend)] = (dt_wall, steps, out)
            print(f"{kind:9s} {backend:6s}: {dt_wall:7.2f}s  "
                  f"{steps / dt_wall / 1e6:8.1f} M steps/s")
    if USING_NUMBA:
        a = results[("stopping", "numba")][2]
        b = results[("stopping", "numpy")][2]
        worst = max(
            float(np.max(np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))
            for x, y in zip(a, b)
        )
        print(f"stopping backends max |diff|: {worst:.3e}")
        speedup = results[("stopping", "numpy")][0] / results[("stopping", "numba")][0]
        print(f"numba speedup on stopping kernel: {speedup:.1f}x")


if __name__ == "__main__":
    bench(int(sys.argv[1]) if len(sys.argv) > 1 else 20_000)
