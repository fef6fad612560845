"""Numba vs numpy kernel timings, and one full AM iteration per backend.

Run: ``python3 benchmarks/bench_kernels.py [--batch 100] [--obstacles 10] [--circles 3]``
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from batchtraj.kernels import get_kernels
from batchtraj.timing import time_iterations


def best_of(fn, repeat: int) -> float:
    fn()  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def main() -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--batch", type=int, default=100)
    p.add_argument("--obstacles", type=int, default=10)
    p.add_argument("--circles", type=int, default=3)
    p.add_argument("--q", type=int, default=50)
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args()

    rng = np.random.default_rng(0)
    L, n, m, q = args.batch, args.obstacles, args.circles, args.q
    x, y = rng.uniform(0, 10, (2, L, q))
    psi = rng.uniform(-np.pi, np.pi, (L, q))
    cp, sp = np.cos(psi), np.sin(psi)
    xo, yo = rng.uniform(0, 10, (2, n, q))
    a = b = np.full(n, 0.6)
    r = np.linspace(-0.4, 0.4, m)

    print(f"L={L} n={n} m={m} q={q}, median of {args.repeat}")
    print(f"{'kernel':<20}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name in ("polar_collision", "collision_targets", "collision_penalty"):
        t = {}
        for backend in ("numba", "numpy"):
            k = get_kernels(backend)
            if name == "polar_collision":
                fn = lambda: k.polar_collision(x, y, cp, sp, xo, yo, a, b, r)
            elif name == "collision_targets":
                _, d, ca, sa = k.polar_collision(x, y, cp, sp, xo, yo, a, b, r)
                fn = lambda: k.collision_targets(x, y, cp, sp, cp, sp, xo, yo, a, b, r, ca, sa, d)
            else:
                fn = lambda: k.collision_penalty(x, y, cp, sp, xo, yo, a, b, r)
            t[backend] = best_of(fn, args.repeat)
        print(f"{name:<20}{1e3 * t['numba']:>10.2f}{1e3 * t['numpy']:>10.2f}{t['numpy'] / t['numba']:>8.1f}x")

    rows = {bk: time_iterations(n, m, L, warmup=3, measure=args.repeat, backend=bk) for bk in ("numba", "numpy")}
    nb, npy = rows["numba"].median_s, rows["numpy"].median_s
    print(f"{'AM iteration':<20}{1e3 * nb:>10.2f}{1e3 * npy:>10.2f}{npy / nb:>8.1f}x")


if __name__ == "__main__":
    main()
