"""Hot inner-loop kernels, JIT-compiled with numba when available.

Set the environment variable ``SEGLEX_NO_NUMBA=1`` to force the plain
Python fallbacks (useful for debugging and as the baseline in
``benchmarks/bench_kernels.py``). Every kernel computes exactly the same
result on either path.
"""

import os

import numpy as np


def _flag(name):
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


NUMBA_ENABLED = False
if not _flag("SEGLEX_NO_NUMBA"):
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:
        pass

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def python_impl(kernel):
    """Return the uncompiled version of a kernel (the kernel itself if numba is off)."""
    return getattr(kernel, "py_func", kernel)


@njit(cache=True)
def prominent_peak_indices(values, threshold):
    """Indices of strict local maxima whose topographic prominence >= threshold.

    A plateau of equal values counts as a single peak at its leftmost index.
    The prominence of a peak with value v is v minus the higher of the two
    base minima, where each base is the minimum along the path outward from
    the peak until a value greater than v (or the curve end) is reached.
    Curve endpoints are never peaks.
    """
    n = values.shape[0]
    out = np.empty(n, np.int64)
    m = 0
    i = 1
    while i < n - 1:
        if values[i] <= values[i - 1]:
            i += 1
            continue
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        if j == n - 1 or values[j + 1] >= values[i]:
            i = j + 1
            continue
        v = values[i]
        left = v
        k = i - 1
        while k >= 0 and values[k] <= v:
            if values[k] < left:
                left = values[k]
            k -= 1
        right = v
        k = j + 1
        while k < n and values[k] <= v:
            if values[k] < right:
                right = values[k]
            k += 1
        base = left if left > right else right
        if v - base >= threshold:
            out[m] = i
            m += 1
        i = j + 1
    return out[:m]


@njit(cache=True)
def levenshtein(a, b):
    """Edit distance between two int sequences (insert/delete/substitute)."""
    la = a.shape[0]
    lb = b.shape[0]
    if la == 0:
        return lb
    if lb == 0:
        return la
    prev = np.arange(lb + 1)
    curr = np.empty(lb + 1, np.int64)
    for i in range(1, la + 1):
        curr[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            sub = prev[j - 1]
            if ai != b[j - 1]:
                sub += 1
            dele = prev[j] + 1
            ins = curr[j - 1] + 1
            best = sub
            if dele < best:
                best = dele
            if ins < best:
                best = ins
            curr[j] = best
        tmp = prev
        prev = curr
        curr = tmp
    return prev[lb]


@njit(cache=True)
def viterbi_forward(cost, max_span):
    """Minimum-cost path DP over candidate positions.

    cost[i, j] is the cost of one segment spanning positions i -> j
    (np.inf marks infeasible pairs); position 0 is the utterance start.
    Equal-cost paths prefer fewer segments, then the earlier predecessor.

    Returns (gamma, n_segments, backpointer) arrays over positions;
    gamma[-1] == np.inf means no feasible path exists.
    """
    n_pos = cost.shape[0]
    gamma = np.full(n_pos, np.inf)
    nseg = np.zeros(n_pos, np.int64)
    back = np.full(n_pos, -1, np.int64)
    gamma[0] = 0.0
    for j in range(1, n_pos):
        lo = j - max_span
        if lo < 0:
            lo = 0
        best_cost = np.inf
        best_nseg = 0
        best_i = -1
        for i in range(lo, j):
            if gamma[i] == np.inf or cost[i, j] == np.inf:
                continue
            tot = gamma[i] + cost[i, j]
            ns = nseg[i] + 1
            if tot < best_cost or (tot == best_cost and ns < best_nseg):
                best_cost = tot
                best_nseg = ns
                best_i = i
        gamma[j] = best_cost
        nseg[j] = best_nseg
        back[j] = best_i
    return gamma, nseg, back
