"""Benchmark the numba block kernels against the pure-numpy fallback.

Run: python3 benchmarks/bench_kernels.py [--repeats 7]

The numba path is warmed up (JIT compiled) before timing.  Sizes cover the
desk-scale Monte Carlo regimes plus one larger case.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from momreg._kernels import HAS_NUMBA, NUMBA_IMPL, NUMPY_IMPL

SIZES = (
    # (n blocks, block size m, dimension d)
    (15, 20, 1),
    (51, 19, 5),
    (101, 49, 3),
    (51, 19, 50),
    (201, 100, 20),
)
KERNELS = ("block_losses", "block_quad", "block_mult", "block_increment")


def _args_for(kernel, X, y, tf, th, n, m):
    if kernel == "block_losses":
        return (X, y, tf, n, m)
    if kernel == "block_quad":
        return (X, tf, th, n, m)
    return (X, y, tf, th, n, m)


def _time_call(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run(repeats: int) -> None:
    rng = np.random.default_rng(0)
    print(f"numba available: {HAS_NUMBA}")
    header = f"{'kernel':<16} {'n':>4} {'m':>4} {'d':>3} {'numpy':>10} {'numba':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n, m, d in SIZES:
        X = rng.standard_normal((n * m, d))
        y = rng.standard_normal(n * m)
        tf = rng.standard_normal(d)
        th = rng.standard_normal(d)
        for kernel in KERNELS:
            args = _args_for(kernel, X, y, tf, th, n, m)
            t_np = _time_call(NUMPY_IMPL[kernel], args, repeats)
            if HAS_NUMBA:
                NUMBA_IMPL[kernel](*args)  # warm-up / JIT
                t_nb = _time_call(NUMBA_IMPL[kernel], args, repeats)
                np.testing.assert_allclose(
                    NUMBA_IMPL[kernel](*args),
                    NUMPY_IMPL[kernel](*args),
                    rtol=1e-9,
                    atol=1e-12,
                )
                print(
                    f"{kernel:<16} {n:>4} {m:>4} {d:>3} "
                    f"{t_np * 1e6:>8.1f}us {t_nb * 1e6:>8.1f}us "
                    f"{t_np / t_nb:>7.2f}x"
                )
            else:
                print(
                    f"{kernel:<16} {n:>4} {m:>4} {d:>3} {t_np * 1e6:>8.1f}us"
                    f" {'-':>10} {'-':>8}"
                )


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=7)
    run(parser.parse_args().repeats)
