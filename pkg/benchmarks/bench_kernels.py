#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

The three hot kernels are the replicate-batched LS fit, the decomposition
sums, and the compensated design summary. Run::

    python benchmarks/bench_kernels.py [--replicates 2000] [--n 2000] [--repeats 5]

Timings exclude JIT compilation (one warm-up call per numba kernel).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from evclt import kernels


def _time(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--replicates", type=int, default=2000)
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    x = np.arange(1.0, args.n + 1.0)
    delta = rng.standard_normal((args.replicates, args.n))
    eps = rng.standard_normal((args.replicates, args.n))
    xi = x[None, :] + delta
    eta = 1.0 + 2.0 * x[None, :] + eps
    x_long = rng.standard_normal(args.replicates * args.n)

    cases = [
        ("fit_batch", kernels.fit_batch_numpy, (xi, eta)),
        ("decompose_batch", kernels.decompose_batch_numpy, (x, xi, eps, delta)),
        ("summary_stats", kernels.summary_stats_numpy, (x_long,)),
    ]

    print(f"workload: replicates={args.replicates} n={args.n} (best of {args.repeats})")
    print(f"{'kernel':<18} {'numpy [ms]':>12} {'numba [ms]':>12} {'speedup':>9}")
    for name, numpy_fn, call_args in cases:
        t_numpy = _time(numpy_fn, call_args, args.repeats)
        if kernels.NUMBA_AVAILABLE:
            numba_fn = getattr(kernels, f"{name}_numba")
            numba_fn(*call_args)  # compile outside the timed region
            t_numba = _time(numba_fn, call_args, args.repeats)
            print(
                f"{name:<18} {t_numpy * 1e3:>12.2f} {t_numba * 1e3:>12.2f} "
                f"{t_numpy / t_numba:>8.2f}x"
            )
        else:
            print(f"{name:<18} {t_numpy * 1e3:>12.2f} {'n/a':>12} {'n/a':>9}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
