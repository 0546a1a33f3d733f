"""Compare the numba and numpy kernel backends.

Runs every hot kernel, plus one end-to-end GW solve, under both backends and
prints median wall-clock times. The first numba call of each kernel is made
before timing so compilation is excluded.

    python3 benchmarks/bench_kernels.py --size 100 --repeat 5
"""

import argparse
import statistics
import time

import numpy as np

from lingw import kernels
from lingw.gw import GwConfig, solve_gw
from lingw.measure import MmSpace, pairwise_euclidean


def _median_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return statistics.median(times)


def build_cases(size, seed):
    rng = np.random.default_rng(seed)
    n = size
    a = rng.random(n) + 0.1
    a /= a.sum()
    b = rng.random(n) + 0.1
    b /= b.sum()
    C = rng.random((n, n))
    pts = rng.random((20 * n, 3))
    D = pairwise_euclidean(pts[: 10 * n])
    labels = np.repeat(np.arange(4), n // 4 + 1)[:n].astype(np.int64)
    Dn = pairwise_euclidean(rng.random((n, 2)))
    members = [np.flatnonzero(labels == c) for c in range(4)]
    reps = np.column_stack([m[rng.integers(m.size, size=2000)] for m in members]).astype(np.int64)
    E = rng.random((25, 50, 50))
    E = 0.5 * (E + E.transpose(0, 2, 1))
    W = np.full((50, 50), 1 / 2500)
    X = MmSpace.from_points(rng.random((n, 2)), id="x")
    Y = MmSpace.from_points(rng.random((n, 2)), id="y")
    cfg = GwConfig(inits=["product"])
    return {
        f"transport_simplex {n}x{n}": lambda: kernels.transport_simplex(C, a, b, 100 * n * n + 10_000),
        f"fps_points {20 * n} -> {n}": lambda: kernels.fps_points(pts, n, 0),
        f"fps_matrix {10 * n} -> {n}": lambda: kernels.fps_matrix(D, n, 0),
        f"confusion_counts N={n}, 2000 reps": lambda: kernels.confusion_counts(Dn, labels, reps, 4),
        "pairwise_weighted_l2 25 x 50^2": lambda: kernels.pairwise_weighted_l2(E, W),
        f"solve_gw {n}x{n} (product init)": lambda: solve_gw(X, Y, cfg),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=100, help="support size of the test problems")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = [b for b in ("numpy", "numba") if b in kernels.available_backends()]
    cases = build_cases(args.size, args.seed)
    rows = []
    for name, fn in cases.items():
        row = [name]
        for backend in backends:
            with kernels.use_backend(backend):
                row.append(_median_time(fn, args.repeat))
        rows.append(row)

    width = max(len(r[0]) for r in rows)
    header = f"{'kernel':<{width}}  " + "  ".join(f"{b:>10}" for b in backends)
    if len(backends) == 2:
        header += "   speedup"
    print(header)
    for r in rows:
        line = f"{r[0]:<{width}}  " + "  ".join(f"{t * 1e3:>8.2f}ms" for t in r[1:])
        if len(backends) == 2:
            line += f"  {r[1] / r[2]:>7.1f}x"
        print(line)


if __name__ == "__main__":
    main()
