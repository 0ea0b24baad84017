"""Compiled vs pure-Python kernels: checks agreement, reports timings.

    python benchmarks/bench_kernels.py [--n 800] [--k 10] [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from pfkm import _kernels_py as py

try:
    from pfkm import _kernels as cy
except ImportError:
    cy = None


def random_csr(n_nodes, out_degree, rng):
    """Random residual-style graph in the CSR layout ``dijkstra`` expects."""
    tail = np.repeat(np.arange(n_nodes), out_degree)
    to = rng.integers(0, n_nodes, size=tail.size).astype(np.int64)
    cap = rng.integers(0, 3, size=tail.size).astype(np.int64)
    cost = rng.integers(0, 10 ** 6, size=tail.size).astype(np.int64)
    start = np.arange(0, tail.size + 1, out_degree, dtype=np.int64)
    return start, to, cap, cost


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=800)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if cy is None:
        print("compiled extension not built; only the Python backend is available")
        return
    rng = np.random.default_rng(0)
    X = rng.random((args.n, 3))
    dist = np.ascontiguousarray(np.linalg.norm(X[:, None] - X[None], axis=2))
    centers = np.sort(rng.choice(args.n, args.k, replace=False)).astype(np.intp)
    csr = random_csr(args.n * 10, 8, rng)
    pot = np.zeros(args.n * 10, dtype=np.int64)

    cases = {
        "nearest_two": lambda m: m.nearest_two(dist, centers),
        "swap_costs": lambda m: m.swap_costs(dist, centers),
        "dijkstra": lambda m: m.dijkstra(*csr, pot, 0),
    }
    print(f"n={args.n} k={args.k}")
    print(f"{'kernel':<12} {'python s':>10} {'cython s':>10} {'speedup':>8}  agree")
    for name, fn in cases.items():
        a, b = fn(py), fn(cy)
        agree = all(np.allclose(x, y, rtol=1e-12, atol=1e-9) for x, y in zip(a, b)) \
            if isinstance(a, tuple) else np.allclose(a, b, rtol=1e-12, atol=1e-9)
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        print(f"{name:<12} {tp:>10.4f} {tc:>10.4f} {tp / tc:>8.1f}  {agree}")


if __name__ == "__main__":
    main()
