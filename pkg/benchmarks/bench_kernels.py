"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--depth 7] [--repeat 3]

Both backends run on the same inputs and their outputs are compared before
any timing is reported.
"""

import argparse
import timeit

import numpy as np

from etale import _kernels_py, builders, kernels
from etale.groupoid import _csr

try:
    from etale import _kernels as compiled
except ImportError:
    compiled = None


def workloads(G):
    N = G.space.size
    K = np.asarray(G.generators, dtype=np.int64)
    # left multiplication by K as a CSR graph on arrows
    rows = [[] for _ in range(G.n_arrows)]
    for g in range(G.n_arrows):
        for k in K[G.source[K] == G.range[g]].tolist():
            rows[g].append(G._mul(k, g))
    indptr = np.cumsum([0] + [len(r) for r in rows])
    indices = np.array([v for r in rows for v in r], dtype=np.int64)
    dist = kernels.bfs_distances(indptr, indices, G.units, G.n_arrows)
    ball = dist <= 3
    ptr, order = _csr(G.source, N)
    rng = np.random.default_rng(0)
    marked = rng.random(N) < 0.5
    n_max = int(dist.max())
    return {
        "bfs_distances": lambda impl: kernels.bfs_distances(indptr, indices, G.units, G.n_arrows, impl=impl),
        "left_image_mask": lambda impl: kernels.left_image_mask(indptr, indices, ball, impl=impl),
        "count_marked": lambda impl: kernels.count_marked(ptr, order, G.range, marked, impl=impl),
        "ball_counts": lambda impl: kernels.ball_counts(dist, G.source, N, n_max, impl=impl),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--depth", type=int, default=7)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    G = builders.odometer(args.depth, mode="principal")
    print(f"principal odometer, depth {args.depth}: {G.space.size} units, {G.n_arrows} arrows")
    print(f"{'kernel':<18}{'compiled (ms)':>15}{'python (ms)':>15}{'speedup':>10}")
    for name, fn in workloads(G).items():
        assert np.array_equal(fn(compiled), fn(_kernels_py)), name
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<18}{tc:>15.3f}{tp:>15.3f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
