"""Pure-Python sliding-histogram kernels (used when the extension is absent).

``window_histograms`` slides the window one stride at a time, tracking the
window min/max with monotonic deques. While the span ``[lo, hi]`` is
unchanged only the followers leaving and entering the window are re-binned;
a span change re-bins the whole window.

``score_runs`` evaluates the weighted average of bin scores for every
follower without visiting each (follower, window) pair. Consecutive windows
with the same span form a run, inside which a follower stays in one bin, and
the triangular window weights are linear in the window index on either side
of the follower. Prefix sums over ``H[i, j]`` and ``i * H[i, j]`` then give
each run's contribution in O(1). All weights are doubled so the arithmetic
stays in integers until the final division.
"""

from __future__ import annotations

from collections import deque

import numpy as np


def _bin(v: int, lo: int, hi: int, n_bins: int) -> int:
    if hi <= lo:
        return 0
    return min((v - lo) * n_bins // (hi - lo), n_bins - 1)


def window_histograms(x: np.ndarray, b: int, n_bins: int, stride: int):
    xs = [int(v) for v in x]
    n = len(xs)
    n_w = (n - b) // stride + 1
    lo_out = [0] * n_w
    hi_out = [0] * n_w
    counts = [None] * n_w
    dmin: deque[int] = deque()
    dmax: deque[int] = deque()
    hist = [0] * n_bins
    cur_lo = cur_hi = 0
    prev_start, prev_end = 0, -1
    for i in range(n_w):
        start = i * stride
        end = start + b - 1
        for p in range(max(prev_end + 1, start), end + 1):
            v = xs[p]
            while dmin and xs[dmin[-1]] >= v:
                dmin.pop()
            dmin.append(p)
            while dmax and xs[dmax[-1]] <= v:
                dmax.pop()
            dmax.append(p)
        while dmin[0] < start:
            dmin.popleft()
        while dmax[0] < start:
            dmax.popleft()
        new_lo, new_hi = xs[dmin[0]], xs[dmax[0]]
        if i > 0 and new_lo == cur_lo and new_hi == cur_hi and start <= prev_end:
            for p in range(prev_start, start):
                hist[_bin(xs[p], cur_lo, cur_hi, n_bins)] -= 1
            for p in range(prev_end + 1, end + 1):
                hist[_bin(xs[p], cur_lo, cur_hi, n_bins)] += 1
        else:
            cur_lo, cur_hi = new_lo, new_hi
            hist = [0] * n_bins
            for p in range(start, end + 1):
                hist[_bin(xs[p], cur_lo, cur_hi, n_bins)] += 1
        lo_out[i] = cur_lo
        hi_out[i] = cur_hi
        counts[i] = list(hist)
        prev_start, prev_end = start, end
    return (
        np.asarray(lo_out, dtype=np.int64),
        np.asarray(hi_out, dtype=np.int64),
        np.asarray(counts, dtype=np.int64).reshape(n_w, n_bins),
    )


def score_runs(x, lo, hi, s0, s1, run_id, run_start, run_end, median, iqr, b: int, stride: int):
    xs = [int(v) for v in x]
    lo = lo.tolist()
    hi = hi.tolist()
    s0 = s0.tolist()
    s1 = s1.tolist()
    run_id = run_id.tolist()
    run_start = run_start.tolist()
    run_end = run_end.tolist()
    median = [float(m) for m in median]
    iqr = [float(q) for q in iqr]
    n, n_w, n_bins = len(xs), len(lo), len(median)
    c0 = (b + 1) // 2 - 1
    out = [1.0] * n
    for p in range(n):
        ilo = max(0, -((b - 1 - p) // stride))  # ceil((p - b + 1) / stride)
        ihi = min(n_w - 1, p // stride)
        if ilo > ihi:
            continue
        istar = (p - c0) // stride
        alpha_l = b + 2 - 2 * (p - c0)
        alpha_r = b + 2 + 2 * (p - c0)
        num = 0.0
        den = 0
        r = run_id[ilo]
        while True:
            ia = max(run_start[r], ilo)
            ib = min(run_end[r], ihi)
            j = _bin(xs[p], lo[ia], hi[ia], n_bins)
            for u, v, alpha, sign in ((ia, min(ib, istar), alpha_l, 1), (max(ia, istar + 1), ib, alpha_r, -1)):
                if u > v:
                    continue
                cnt = v - u + 1
                sum_i = (u + v) * cnt // 2
                sh = s0[v + 1][j] - s0[u][j]
                sih = s1[v + 1][j] - s1[u][j]
                w2 = alpha * cnt + sign * 2 * stride * sum_i
                wh2 = alpha * sh + sign * 2 * stride * sih
                num += (wh2 - (median[j] - 1.0) * w2) / (iqr[j] + 1.0)
                den += w2
            if ib >= ihi:
                break
            r += 1
        out[p] = num / den
    return np.asarray(out, dtype=np.float64)
