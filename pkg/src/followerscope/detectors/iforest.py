"""Isolation Forest scores."""

from __future__ import annotations

import logging
import math

import numpy as np

from ..features import FeatureMatrix
from ..scores import ScoredFollowers
from ._common import feature_values, make_rng, seed_value
from .trees import average_path_length, grow_trees

log = logging.getLogger(__name__)


def isolation_forest_score(
    features: FeatureMatrix | np.ndarray,
    n_trees: int = 200,
    subsample: int = 256,
    seed=None,
    account_id: str = "",
    scale: bool = True,
) -> ScoredFollowers:
    """``s = 2^(-E[h]/c(m))`` where ``h`` is the path length plus ``c(leaf size)``.

    Trees are limited to ``ceil(log2 m)`` levels. ``seed`` may also be a
    generator-like object exposing ``random`` and ``permutation``.
    """
    X = feature_values(features, scale)
    n = X.shape[0]
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")
    if subsample > n:
        log.warning("subsample %d exceeds %d rows; using %d", subsample, n, n)
        subsample = n
    if subsample < 2:
        raise ValueError(f"subsample must be >= 2, got {subsample}")
    rng = make_rng(seed)
    depth, size = grow_trees(X, n_trees, rng, sample_size=subsample, max_depth=math.ceil(math.log2(subsample)))
    path = depth + average_path_length(size)
    scores = 2.0 ** (-path.mean(axis=0) / average_path_length(subsample))
    params = {"n_trees": n_trees, "subsample": subsample, "scaled": scale}
    return ScoredFollowers(account_id, "isolation_forest", scores, params, seed_value(seed))
