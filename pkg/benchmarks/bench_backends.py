"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs the two hot paths (best-match shapelet transform, causal convolution
forward/backward) through both implementations and prints a table. The
active package backend is whatever SHAPECLUST_BACKEND selected at import;
both code paths are timed directly regardless.

Usage:
    python3 benchmarks/bench_backends.py [--m 200] [--n 512] [--k 10]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from shapeclust._backend import NUMBA_ENABLED, backend_name
from shapeclust.autodiff import _conv1d_bwd_numpy, _conv1d_fwd_numpy
from shapeclust.data import Dataset, TimeSeriesInstance
from shapeclust.distance import _best_match_numpy, _transform_numpy


def timeit(fn, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_transform(m, n, k, rng):
    channels = rng.normal(size=(m, n))
    shapelets = [rng.normal(size=int(rng.integers(n // 10, n // 2))) for _ in range(k)]

    def run_numpy():
        for sh in shapelets:
            _transform_numpy(channels, sh)

    rows = [("transform (numpy)", timeit(run_numpy))]
    if NUMBA_ENABLED:
        from shapeclust.distance import _transform_numba

        contiguous = np.ascontiguousarray(channels)

        def run_numba():
            for sh in shapelets:
                _transform_numba(contiguous, sh)

        run_numba()  # compile outside the clock
        rows.append(("transform (numba)", timeit(run_numba)))
    return rows


def bench_best_match(rng):
    pairs = [
        (rng.normal(size=int(rng.integers(8, 64))), rng.normal(size=256))
        for _ in range(2000)
    ]

    def run_numpy():
        for shorter, longer in pairs:
            _best_match_numpy(shorter, longer)

    rows = [("best_match x2000 (numpy)", timeit(run_numpy, repeats=3))]
    if NUMBA_ENABLED:
        from shapeclust.distance import _best_match_numba

        _best_match_numba(pairs[0][0], pairs[0][1])

        def run_numba():
            for shorter, longer in pairs:
                _best_match_numba(shorter, longer)

        rows.append(("best_match x2000 (numba)", timeit(run_numba, repeats=3)))
    return rows


def bench_conv(rng):
    x = rng.normal(size=(9, 40, 32))
    w = rng.normal(size=(40, 40, 3))
    b = rng.normal(size=40)
    dout = rng.normal(size=(9, 40, 32))
    rows = [
        ("conv fwd x100 (numpy)", timeit(lambda: [_conv1d_fwd_numpy(x, w, b, 2) for _ in range(100)])),
        ("conv bwd x100 (numpy)", timeit(lambda: [_conv1d_bwd_numpy(x, w, dout, 2) for _ in range(100)])),
    ]
    if NUMBA_ENABLED:
        from shapeclust.autodiff import _conv1d_bwd_numba, _conv1d_fwd_numba

        _conv1d_fwd_numba(x, w, b, 2)
        _conv1d_bwd_numba(x, w, dout, 2)
        rows.append(
            ("conv fwd x100 (numba)", timeit(lambda: [_conv1d_fwd_numba(x, w, b, 2) for _ in range(100)]))
        )
        rows.append(
            ("conv bwd x100 (numba)", timeit(lambda: [_conv1d_bwd_numba(x, w, dout, 2) for _ in range(100)]))
        )
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m", type=int, default=200, help="series count")
    parser.add_argument("--n", type=int, default=512, help="series length")
    parser.add_argument("--k", type=int, default=10, help="shapelet count")
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"active backend: {backend_name()}")
    print(f"transform workload: M={args.m} N={args.n} k={args.k}\n")
    rows = []
    rows += bench_transform(args.m, args.n, args.k, rng)
    rows += bench_best_match(rng)
    rows += bench_conv(rng)
    width = max(len(name) for name, _ in rows)
    for name, seconds in rows:
        print(f"{name:<{width}}  {seconds * 1000:9.2f} ms")
    by_kind: dict = {}
    for name, seconds in rows:
        kind, impl = name.rsplit("(", 1)
        by_kind.setdefault(kind.strip(), {})[impl.rstrip(")")] = seconds
    print()
    for kind, impls in by_kind.items():
        if {"numpy", "numba"} <= impls.keys():
            print(f"{kind}: numba is {impls['numpy'] / impls['numba']:.1f}x vs numpy")


if __name__ == "__main__":
    main()
