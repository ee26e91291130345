"""Empirical-CDF outlier scores."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata, skew

from ..features import FeatureMatrix
from ..scores import ScoredFollowers
from ._common import feature_values


def tail_probabilities(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-column ``P(X <= x)`` and ``P(X >= x)`` under the empirical distribution."""
    n = X.shape[0]
    left = rankdata(X, method="max", axis=0) / n
    right = rankdata(-X, method="max", axis=0) / n
    return left, right


def ecod_score(features: FeatureMatrix | np.ndarray, account_id: str = "") -> ScoredFollowers:
    """Max of the summed left-tail, right-tail and skew-directed tail surprisals.

    Constant columns have both tails equal to 1 and contribute nothing.
    """
    X = feature_values(features, scale=False)
    left, right = tail_probabilities(X)
    u_left = -np.log(left)
    u_right = -np.log(right)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = skew(X, axis=0)
    g = np.nan_to_num(g)
    u_skew = np.where(g < 0, u_left, u_right)
    scores = np.maximum.reduce([u_left.sum(axis=1), u_right.sum(axis=1), u_skew.sum(axis=1)])
    return ScoredFollowers(account_id, "ecod", scores, {})
