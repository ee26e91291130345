"""Local Outlier Factor over a k-d tree."""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import cKDTree

from ..features import FeatureMatrix
from ..scores import ScoredFollowers
from ._common import feature_values

_CHUNK_ELEMS = 1 << 20


def resolve_min_pts(min_pts: int | float, n: int) -> int:
    """Fractions in (0, 1) are taken of ``n`` and rounded up; the result is at least 2."""
    if isinstance(min_pts, float) and 0 < min_pts < 1:
        k = math.ceil(min_pts * n)
    else:
        k = int(min_pts)
    return max(k, 2)


def _neighbors(tree: cKDTree, X: np.ndarray, rows: np.ndarray, k: int):
    """k nearest neighbours of ``X[rows]``, excluding each row itself."""
    d, idx = tree.query(X[rows], k=k + 1)
    own = idx == rows[:, None]
    # exact duplicates may push the row itself past position k; drop the last one then
    own[~own.any(axis=1), -1] = True
    own &= np.cumsum(own, axis=1) == 1
    keep = ~own
    return d[keep].reshape(rows.size, k), idx[keep].reshape(rows.size, k)


def lof_score(
    features: FeatureMatrix | np.ndarray, min_pts: int | float = 0.03, account_id: str = "", scale: bool = True
) -> ScoredFollowers:
    X = feature_values(features, scale)
    n = X.shape[0]
    k = resolve_min_pts(min_pts, n)
    if n <= k:
        raise ValueError(f"LOF needs more rows than min_pts: n_rows={n}, min_pts={k}")
    tree = cKDTree(X)
    step = max(1, _CHUNK_ELEMS // (k + 1))

    # one k-d tree pass; neighbour distances are recomputed from X when needed
    nbr = np.empty((n, k), dtype=np.int32 if n < 2**31 else np.int64)
    kdist = np.empty(n)
    for a in range(0, n, step):
        rows = np.arange(a, min(n, a + step))
        d, idx = _neighbors(tree, X, rows, k)
        nbr[rows] = idx
        kdist[rows] = d.max(axis=1)

    lrd = np.empty(n)
    for a in range(0, n, step):
        b = min(n, a + step)
        idx = nbr[a:b]
        d = np.sqrt(((X[idx] - X[a:b, None, :]) ** 2).sum(axis=2))
        reach = np.maximum(kdist[idx], d)
        lrd[a:b] = 1.0 / (reach.mean(axis=1) + 1e-10)
    lof = np.empty(n)
    for a in range(0, n, step):
        b = min(n, a + step)
        lof[a:b] = lrd[nbr[a:b]].mean(axis=1) / lrd[a:b]
    params = {"min_pts": k, "scaled": scale}
    return ScoredFollowers(account_id, "lof", lof, params)
