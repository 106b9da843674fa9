#!/usr/bin/env python3
"""Compare the numba-compiled kernels against their pure-Python fallbacks.

Runs each hot kernel on realistic workloads and prints a speedup table.
With SEGLEX_NO_NUMBA=1 both columns run the fallback (sanity mode).

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from seglex import _accel


def timeit(fn, args_list, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for args in args_list:
            fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_prominence(rng, repeat):
    # smoothed dissimilarity curves of ~1000-frame utterances
    args = [(rng.uniform(0, 2, size=1000), 0.4) for _ in range(200)]
    return "prominent_peak_indices", _accel.prominent_peak_indices, args, repeat


def bench_levenshtein(rng, repeat):
    # phone transcriptions of word-sized tokens, scored pairwise for NED
    seqs = [rng.integers(0, 40, size=rng.integers(2, 12)).astype(np.int64) for _ in range(120)]
    args = [(a, b) for a in seqs for b in seqs[:20]]
    return "levenshtein", _accel.levenshtein, args, repeat


def bench_viterbi(rng, repeat):
    # utterances with ~80 candidate positions, span limit 4
    args = []
    for _ in range(100):
        n_pos = 80
        cost = np.full((n_pos, n_pos), np.inf)
        for i in range(n_pos - 1):
            for j in range(i + 1, min(i + 4, n_pos - 1) + 1):
                cost[i, j] = rng.uniform(0.1, 5.0)
        args.append((cost, 4))
    return "viterbi_forward", _accel.viterbi_forward, args, repeat


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    opts = parser.parse_args()
    rng = np.random.default_rng(0)

    print(f"numba enabled: {_accel.NUMBA_ENABLED}")
    rows = []
    for name, kernel, args, repeat in (
        bench_prominence(rng, opts.repeat),
        bench_levenshtein(rng, opts.repeat),
        bench_viterbi(rng, opts.repeat),
    ):
        fallback = _accel.python_impl(kernel)
        kernel(*args[0])  # trigger compilation outside the timed region
        t_fast = timeit(kernel, args, repeat)
        t_py = timeit(fallback, args, repeat)
        rows.append((name, t_py, t_fast, t_py / t_fast if t_fast > 0 else float("inf")))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'python':>10}  {'selected':>10}  {'speedup':>8}")
    for name, t_py, t_fast, speedup in rows:
        print(f"{name:<{width}}  {t_py:>9.4f}s  {t_fast:>9.4f}s  {speedup:>7.1f}x")


if __name__ == "__main__":
    main()
