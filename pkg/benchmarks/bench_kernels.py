#!/usr/bin/env python3
"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both paths are imported from the same module, so the env flag is not needed
here. The first numba call includes compilation and is reported separately.
"""
import argparse
import time

import numpy as np

from locctl import _kernels as K


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def cases(rng):
    z = rng.standard_normal(50)
    yield "project_simplex n=50", K.project_simplex_np, K.project_simplex_nb, (z,)
    z = rng.standard_normal(5000)
    yield "project_simplex n=5000", K.project_simplex_np, K.project_simplex_nb, (z,)
    yield "project_simplex n=5000 (dispatch)", K.project_simplex_np, K._project_simplex_dispatch, (z,)
    pts = rng.uniform(-1, 1, (2000, 2))
    ctr = rng.uniform(-1, 1, (4096, 2))
    yield "distance_totals 2000x4096", K.distance_totals_np, K.distance_totals_nb, (pts, ctr, 1.0)
    mu = rng.dirichlet(np.ones(40)) * 3
    mu = np.minimum(mu, 1.0)
    mu *= 3 / mu.sum()
    yield "systematic_menus n=40 k=3", K.systematic_menus_np, K.systematic_menus_nb, (mu, 3)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not K.HAS_NUMBA:
        print("numba is not importable; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s} {'first numba call':>17s}")
    for name, f_np, f_nb, a in cases(rng):
        t = time.perf_counter()
        f_nb(*a)
        first = time.perf_counter() - t
        t_np = _time(f_np, a, args.repeat)
        t_nb = _time(f_nb, a, args.repeat)
        print(f"{name:36s} {t_np * 1e3:9.3f}ms {t_nb * 1e3:9.3f}ms {t_np / t_nb:7.1f}x {first * 1e3:15.1f}ms")


if __name__ == "__main__":
    main()
