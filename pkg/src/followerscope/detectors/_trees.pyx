# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled level-wise tree growth.

Same contract and the same random draws as ``trees._grow_numpy``: two
``rng.random(n_nodes)`` calls per level, so both paths give identical trees.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, INFINITY
from libc.stdint cimport int64_t

cnp.import_array()


def grow(
    const double[:, ::1] X,
    const int64_t[::1] sample_rows,
    const int64_t[::1] sample_tree,
    const int64_t[::1] query_rows,
    const int64_t[::1] query_tree,
    Py_ssize_t n_trees,
    int64_t max_depth,
    rng,
):
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t n_s = sample_rows.shape[0]
    cdef Py_ssize_t n_q = query_rows.shape[0]
    q_depth_a = np.zeros(n_q, dtype=np.int64)
    q_size_a = np.zeros(n_q, dtype=np.int64)
    cdef int64_t[::1] q_depth = q_depth_a
    cdef int64_t[::1] q_size = q_size_a

    cdef int64_t[::1] s_row = np.array(sample_rows, dtype=np.int64)
    cdef int64_t[::1] s_node = np.array(sample_tree, dtype=np.int64)
    cdef int64_t[::1] q_idx = np.arange(n_q, dtype=np.int64)
    cdef int64_t[::1] q_node = np.array(query_tree, dtype=np.int64)

    cdef Py_ssize_t n_nodes = n_trees, n_active_s = n_s, n_active_q = n_q
    cdef int64_t depth = 0
    cdef Py_ssize_t i, j, k, node, c, row, pick, m
    cdef double v, flo, fhi
    cdef int64_t[::1] counts
    cdef double[:, ::1] lo
    cdef double[:, ::1] hi
    cdef int64_t[::1] n_split
    cdef unsigned char[::1] terminal
    cdef double[::1] u_feat
    cdef double[::1] u_thr
    cdef int64_t[::1] feat
    cdef double[::1] thr
    cdef int64_t[::1] remap

    while n_active_q > 0:
        counts = np.zeros(n_nodes, dtype=np.int64)
        lo = np.full((n_nodes, d), INFINITY)
        hi = np.full((n_nodes, d), -INFINITY)
        for i in range(n_active_s):
            node = s_node[i]
            row = s_row[i]
            counts[node] += 1
            for j in range(d):
                v = X[row, j]
                if v < lo[node, j]:
                    lo[node, j] = v
                if v > hi[node, j]:
                    hi[node, j] = v
        n_split = np.zeros(n_nodes, dtype=np.int64)
        terminal = np.zeros(n_nodes, dtype=np.uint8)
        for node in range(n_nodes):
            for j in range(d):
                if hi[node, j] > lo[node, j]:
                    n_split[node] += 1
            terminal[node] = counts[node] <= 1 or n_split[node] == 0 or depth >= max_depth

        u_feat = rng.random(n_nodes)
        u_thr = rng.random(n_nodes)

        m = 0
        for i in range(n_active_q):
            node = q_node[i]
            if terminal[node]:
                q_depth[q_idx[i]] = depth
                q_size[q_idx[i]] = counts[node]
            else:
                q_idx[m] = q_idx[i]
                q_node[m] = node
                m += 1
        n_active_q = m
        if n_active_q == 0:
            break

        feat = np.zeros(n_nodes, dtype=np.int64)
        thr = np.zeros(n_nodes)
        for node in range(n_nodes):
            if terminal[node]:
                continue
            c = n_split[node] if n_split[node] > 0 else 1
            pick = <Py_ssize_t>floor(u_feat[node] * c)
            k = -1
            for j in range(d):
                if hi[node, j] > lo[node, j]:
                    if pick == 0:
                        k = j
                        break
                    pick -= 1
            if k < 0:  # only reachable through rounding at u -> 1
                k = 0
            flo = lo[node, k]
            fhi = hi[node, k]
            feat[node] = k
            thr[node] = fhi - u_thr[node] * (fhi - flo)

        # children 2*node + side; renumber present children in sorted order
        remap = np.full(2 * n_nodes, -1, dtype=np.int64)
        m = 0
        for i in range(n_active_s):
            node = s_node[i]
            if terminal[node]:
                continue
            c = 2 * node + (X[s_row[i], feat[node]] >= thr[node])
            remap[c] = 0
            s_row[m] = s_row[i]
            s_node[m] = c
            m += 1
        n_active_s = m
        k = 0
        for c in range(2 * n_nodes):
            if remap[c] == 0:
                remap[c] = k
                k += 1
        for i in range(n_active_s):
            s_node[i] = remap[s_node[i]]
        for i in range(n_active_q):
            node = q_node[i]
            c = 2 * node + (X[query_rows[q_idx[i]], feat[node]] >= thr[node])
            q_node[i] = remap[c]
        n_nodes = k
        depth += 1
    return q_depth_a, q_size_a
