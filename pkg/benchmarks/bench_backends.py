#!/usr/bin/env python3
"""Benchmark the compiled SGD kernel against the numpy fallback.

Usage: python3 benchmarks/bench_backends.py [--epochs 20] [--rows 2000]
"""

import argparse
import time

import numpy as np

from advfilter import _sgd_py

try:
    from advfilter import _sgd_cy
except ImportError:
    _sgd_cy = None


def bench(fn, X, y, L, perms, batch, lr, l2, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(X, y, L, perms, batch, lr, l2)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--dim", type=int, default=64)
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--batch-size", type=int, default=256)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    X = np.ascontiguousarray(rng.normal(size=(args.rows, args.dim)))
    y = rng.integers(0, args.classes, args.rows).astype(np.int64)
    perms = np.stack(
        [rng.permutation(args.rows) for _ in range(args.epochs)]
    ).astype(np.int64)

    t_py = bench(_sgd_py.sgd_train, X, y, args.classes, perms, args.batch_size, 0.01, 1e-4)
    print(f"numpy fallback : {t_py * 1e3:8.2f} ms")
    if _sgd_cy is None:
        print("cython kernel  : not built")
        return
    t_cy = bench(_sgd_cy.sgd_train, X, y, args.classes, perms, args.batch_size, 0.01, 1e-4)
    print(f"cython kernel  : {t_cy * 1e3:8.2f} ms   ({t_py / t_cy:.2f}x vs numpy)")

    W1, b1 = _sgd_py.sgd_train(X, y, args.classes, perms, args.batch_size, 0.01, 1e-4)
    W2, b2 = _sgd_cy.sgd_train(X, y, args.classes, perms, args.batch_size, 0.01, 1e-4)
    print(f"max |dW| between backends: {np.abs(W1 - W2).max():.3e}")


if __name__ == "__main__":
    main()
