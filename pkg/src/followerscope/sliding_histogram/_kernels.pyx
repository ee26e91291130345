# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sliding-histogram kernels.

Same contracts as ``_fallback``; see that module for the algorithm notes.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


cdef inline Py_ssize_t _bin(int64_t v, int64_t lo, int64_t hi, Py_ssize_t n_bins) nogil:
    cdef int64_t j
    if hi <= lo:
        return 0
    j = ((v - lo) * n_bins) // (hi - lo)
    if j >= n_bins:
        return n_bins - 1
    return <Py_ssize_t>j


cdef inline int64_t _floordiv(int64_t a, int64_t b) nogil:
    cdef int64_t q = a // b
    if (a % b != 0) and ((a < 0) != (b < 0)):
        q -= 1
    return q


def window_histograms(const int64_t[::1] x, Py_ssize_t b, Py_ssize_t n_bins, Py_ssize_t stride):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_w = (n - b) // stride + 1
    lo_arr = np.empty(n_w, dtype=np.int64)
    hi_arr = np.empty(n_w, dtype=np.int64)
    counts_arr = np.zeros((n_w, n_bins), dtype=np.int64)
    cdef int64_t[::1] lo = lo_arr
    cdef int64_t[::1] hi = hi_arr
    cdef int64_t[:, ::1] counts = counts_arr
    cdef Py_ssize_t[::1] dmin = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] dmax = np.empty(n, dtype=np.intp)
    cdef int64_t[::1] hist = np.zeros(n_bins, dtype=np.int64)
    cdef Py_ssize_t hmin = 0, tmin = 0, hmax = 0, tmax = 0
    cdef Py_ssize_t i, p, j, start, end, prev_start = 0, prev_end = -1
    cdef int64_t cur_lo = 0, cur_hi = 0, new_lo, new_hi
    cdef bint same

    with nogil:
        for i in range(n_w):
            start = i * stride
            end = start + b - 1
            # grow deques with newly entered positions
            p = prev_end + 1 if prev_end + 1 > start else start
            while p <= end:
                while tmin > hmin and x[dmin[tmin - 1]] >= x[p]:
                    tmin -= 1
                dmin[tmin] = p
                tmin += 1
                while tmax > hmax and x[dmax[tmax - 1]] <= x[p]:
                    tmax -= 1
                dmax[tmax] = p
                tmax += 1
                p += 1
            while dmin[hmin] < start:
                hmin += 1
            while dmax[hmax] < start:
                hmax += 1
            new_lo = x[dmin[hmin]]
            new_hi = x[dmax[hmax]]
            same = i > 0 and new_lo == cur_lo and new_hi == cur_hi and start <= prev_end
            if same:
                # span unchanged: move followers in/out of their bins
                for p in range(prev_start, start):
                    hist[_bin(x[p], cur_lo, cur_hi, n_bins)] -= 1
                for p in range(prev_end + 1, end + 1):
                    hist[_bin(x[p], cur_lo, cur_hi, n_bins)] += 1
            else:
                cur_lo = new_lo
                cur_hi = new_hi
                for j in range(n_bins):
                    hist[j] = 0
                for p in range(start, end + 1):
                    hist[_bin(x[p], cur_lo, cur_hi, n_bins)] += 1
            lo[i] = cur_lo
            hi[i] = cur_hi
            for j in range(n_bins):
                counts[i, j] = hist[j]
            prev_start = start
            prev_end = end
    return lo_arr, hi_arr, counts_arr


def score_runs(
    const int64_t[::1] x,
    const int64_t[::1] lo,
    const int64_t[::1] hi,
    const int64_t[:, ::1] s0,
    const int64_t[:, ::1] s1,
    const int64_t[::1] run_id,
    const int64_t[::1] run_start,
    const int64_t[::1] run_end,
    const double[::1] median,
    const double[::1] iqr,
    Py_ssize_t b,
    Py_ssize_t stride,
):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_w = lo.shape[0]
    cdef Py_ssize_t n_bins = median.shape[0]
    cdef int64_t c0 = (b + 1) // 2 - 1
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t p, r, j
    cdef int64_t ilo, ihi, istar, ia, ib, u, v, cnt, sum_i, sh, sih, w2, wh2, alpha_l, alpha_r
    cdef int64_t den
    cdef double num

    with nogil:
        for p in range(n):
            ilo = _floordiv(p - b + 1 + stride - 1, stride)
            if ilo < 0:
                ilo = 0
            ihi = p // stride
            if ihi > n_w - 1:
                ihi = n_w - 1
            if ilo > ihi:
                out[p] = 1.0
                continue
            istar = _floordiv(p - c0, stride)
            alpha_l = b + 2 - 2 * (p - c0)
            alpha_r = b + 2 + 2 * (p - c0)
            num = 0.0
            den = 0
            r = run_id[ilo]
            while True:
                ia = run_start[r] if run_start[r] > ilo else ilo
                ib = run_end[r] if run_end[r] < ihi else ihi
                j = _bin(x[p], lo[ia], hi[ia], n_bins)
                # windows whose centre is at or before p
                u = ia
                v = ib if ib < istar else istar
                if u <= v:
                    cnt = v - u + 1
                    sum_i = (u + v) * cnt // 2
                    sh = s0[v + 1, j] - s0[u, j]
                    sih = s1[v + 1, j] - s1[u, j]
                    w2 = alpha_l * cnt + 2 * stride * sum_i
                    wh2 = alpha_l * sh + 2 * stride * sih
                    num += (wh2 - (median[j] - 1.0) * w2) / (iqr[j] + 1.0)
                    den += w2
                # windows whose centre is after p
                u = ia if ia > istar + 1 else istar + 1
                v = ib
                if u <= v:
                    cnt = v - u + 1
                    sum_i = (u + v) * cnt // 2
                    sh = s0[v + 1, j] - s0[u, j]
                    sih = s1[v + 1, j] - s1[u, j]
                    w2 = alpha_r * cnt - 2 * stride * sum_i
                    wh2 = alpha_r * sh - 2 * stride * sih
                    num += (wh2 - (median[j] - 1.0) * w2) / (iqr[j] + 1.0)
                    den += w2
                if ib >= ihi:
                    break
                r += 1
            out[p] = num / den
    return out_arr
