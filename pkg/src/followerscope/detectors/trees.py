"""Random-split trees grown level by level, many trees at once.

Each tree is grown on a set of "sample" rows; "query" rows are routed through
the same splits. At every node a feature is drawn uniformly among the
features that are not constant on the node's sample rows, and a threshold is
drawn uniformly in ``(min, max]`` of that feature; rows below the threshold
go left. A node stops splitting when it holds at most one sample row, when
all its sample rows are identical, or at ``max_depth``.

Node ids at each level are renumbered in sorted order of their parent-derived
ids, so the random draws depend only on the tree structure, never on the
order of the rows.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from . import _trees
except ImportError:  # extension not built
    _trees = None

EULER_GAMMA = 0.5772156649015329
_BATCH_ELEMS = 1 << 21


def average_path_length(m) -> np.ndarray:
    """Expected unsuccessful-search path length in a random BST of ``m`` points."""
    m = np.asarray(m, dtype=np.float64)
    out = np.zeros_like(m)
    big = m > 2
    out[m == 2] = 1.0
    mb = m[big]
    out[big] = 2.0 * (np.log(mb - 1.0) + EULER_GAMMA) - 2.0 * (mb - 1.0) / mb
    return out


def _grow_numpy(X, sample_rows, sample_tree, query_rows, query_tree, n_trees, max_depth, rng):
    """Grow ``n_trees`` trees; return (depth, size) of each query row's terminal node."""
    q_depth = np.zeros(query_rows.size, dtype=np.int64)
    q_size = np.zeros(query_rows.size, dtype=np.int64)

    s_rows, s_node = sample_rows, sample_tree.astype(np.int64)
    q_idx = np.arange(query_rows.size)
    q_node = query_tree.astype(np.int64)
    n_nodes = n_trees
    depth = 0
    while q_idx.size:
        counts = np.bincount(s_node, minlength=n_nodes)
        order = np.argsort(s_node, kind="stable")
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        vals = X[s_rows[order]]
        safe_starts = np.minimum(starts, max(vals.shape[0] - 1, 0))
        lo = np.minimum.reduceat(vals, safe_starts, axis=0)
        hi = np.maximum.reduceat(vals, safe_starts, axis=0)
        splittable = hi > lo
        n_split = splittable.sum(axis=1)
        terminal = (counts <= 1) | (n_split == 0) | (depth >= max_depth)

        # feature / threshold draws, one per node, in node order
        u_feat = rng.random(n_nodes)
        u_thr = rng.random(n_nodes)

        q_term = terminal[q_node]
        done = q_idx[q_term]
        q_depth[done] = depth
        q_size[done] = counts[q_node[q_term]]
        q_idx, q_node = q_idx[~q_term], q_node[~q_term]
        if not q_idx.size:
            break

        pick = np.floor(u_feat * np.maximum(n_split, 1)).astype(np.int64)
        feat = np.argmax(np.cumsum(splittable, axis=1) > pick[:, None], axis=1)
        flo = lo[np.arange(n_nodes), feat]
        fhi = hi[np.arange(n_nodes), feat]
        thr = fhi - u_thr * (fhi - flo)

        s_keep = ~terminal[s_node]
        s_rows, s_node = s_rows[s_keep], s_node[s_keep]
        s_child = 2 * s_node + (X[s_rows, feat[s_node]] >= thr[s_node])
        q_child = 2 * q_node + (X[query_rows[q_idx], feat[q_node]] >= thr[q_node])
        uniq, s_node = np.unique(s_child, return_inverse=True)
        q_node = np.searchsorted(uniq, q_child)
        n_nodes = uniq.size
        depth += 1
    return q_depth, q_size


GROWERS = {"numpy": _grow_numpy}
if _trees is not None:
    GROWERS["compiled"] = _trees.grow
DEFAULT_GROWER = "compiled" if _trees is not None and not os.environ.get("FOLLOWERSCOPE_PURE_PYTHON") else "numpy"


def _grow(X, sample_rows, sample_tree, query_rows, query_tree, n_trees, max_depth, rng, backend=None):
    fn = GROWERS[backend or DEFAULT_GROWER]
    return fn(
        X,
        np.ascontiguousarray(sample_rows, dtype=np.int64),
        np.ascontiguousarray(sample_tree, dtype=np.int64),
        np.ascontiguousarray(query_rows, dtype=np.int64),
        np.ascontiguousarray(query_tree, dtype=np.int64),
        n_trees,
        max_depth,
        rng,
    )


def grow_trees(
    X: np.ndarray,
    n_trees: int,
    rng,
    sample_size: int | None = None,
    max_depth: int | None = None,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Grow ``n_trees`` random-split trees and route every row of ``X``.

    Each tree's sample is ``sample_size`` rows drawn without replacement (all
    rows when ``sample_size`` is None or >= n). Returns ``(depth, size)``
    arrays of shape ``(n_trees, n)``: the depth of the terminal node each row
    reaches and the number of sample rows in that node.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    m = n if sample_size is None or sample_size >= n else int(sample_size)
    limit = np.iinfo(np.int64).max if max_depth is None else int(max_depth)
    depth = np.empty((n_trees, n), dtype=np.int64)
    size = np.empty((n_trees, n), dtype=np.int64)
    batch = max(1, _BATCH_ELEMS // (n + m))
    all_rows = np.arange(n)
    for t0 in range(0, n_trees, batch):
        t1 = min(n_trees, t0 + batch)
        k = t1 - t0
        if m == n:
            sample_rows = np.tile(all_rows, k)
        else:
            sample_rows = np.concatenate([rng.permutation(n)[:m] for _ in range(k)])
        sample_tree = np.repeat(np.arange(k), m)
        query_rows = np.tile(all_rows, k)
        query_tree = np.repeat(np.arange(k), n)
        qd, qs = _grow(X, sample_rows, sample_tree, query_rows, query_tree, k, limit, rng, backend)
        depth[t0:t1] = qd.reshape(k, n)
        size[t0:t1] = qs.reshape(k, n)
    return depth, size


def full_tree_mean_depths(X: np.ndarray, subsets: list[np.ndarray], rng, backend: str | None = None) -> np.ndarray:
    """Mean leaf depth of the rows of each subset in one fully grown tree per subset."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    out = np.empty(len(subsets))
    for i, rows in enumerate(subsets):
        rows = np.asarray(rows)
        tree = np.zeros(rows.size, dtype=np.int64)
        qd, _ = _grow(X, rows, tree, rows, tree, 1, np.iinfo(np.int64).max, rng, backend)
        out[i] = qd.mean()
    return out
