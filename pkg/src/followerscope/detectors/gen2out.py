"""Gen2Out point scores from depth-capped random trees.

A depth model ``H(l) = slope * log2(l)`` is fitted to the mean leaf depth of
fully grown trees on random subsets. Each point's path length in a capped
tree is its leaf depth plus ``H`` of the number of points left in that leaf,
and the score is ``2^(-E[h] / H(n))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..features import FeatureMatrix
from ..scores import ScoredFollowers
from ._common import feature_values, make_rng, seed_value
from .trees import full_tree_mean_depths, grow_trees

MIN_FIT_SIZE = 16
TREES_PER_SIZE = 5


@dataclass(frozen=True)
class DepthModel:
    slope: float

    def __call__(self, count) -> np.ndarray:
        count = np.asarray(count, dtype=np.float64)
        return self.slope * np.log2(np.maximum(count, 1.0))


@dataclass
class AtomForest:
    depth_model: DepthModel
    max_depth: int
    leaf_depth: np.ndarray  # (n_trees, n) depth of each point's leaf
    leaf_size: np.ndarray  # (n_trees, n) points in that leaf

    def path_lengths(self) -> np.ndarray:
        return self.leaf_depth + self.depth_model(self.leaf_size)


def fit_subset_sizes(n: int) -> list[int]:
    if n < 2:
        raise ValueError("need at least 2 rows")
    lo = MIN_FIT_SIZE if n >= MIN_FIT_SIZE else 2
    sizes = []
    s = lo
    while s <= n:
        sizes.append(s)
        s *= 2
    return sizes


def fit_depth_model(X: np.ndarray, rng, trees_per_size: int = TREES_PER_SIZE) -> DepthModel:
    """Least-squares slope through the origin of mean full-tree depth on log2(size)."""
    n = X.shape[0]
    sizes = fit_subset_sizes(n)
    subsets, logs = [], []
    for s in sizes:
        for _ in range(trees_per_size):
            subsets.append(rng.permutation(n)[:s])
            logs.append(np.log2(s))
    depths = full_tree_mean_depths(X, subsets, rng)
    logs = np.asarray(logs)
    return DepthModel(float(np.dot(logs, depths) / np.dot(logs, logs)))


def grow_atom_forest(X: np.ndarray, max_depth: int, n_trees: int, rng) -> AtomForest:
    model = fit_depth_model(X, rng)
    depth, size = grow_trees(X, n_trees, rng, max_depth=max_depth)
    return AtomForest(model, max_depth, depth, size)


def gen2out_score(
    features: FeatureMatrix | np.ndarray,
    max_depth: int = 10,
    n_trees: int = 100,
    seed=None,
    account_id: str = "",
    scale: bool = True,
) -> ScoredFollowers:
    X = feature_values(features, scale)
    if max_depth < 1 or n_trees < 1:
        raise ValueError("max_depth and n_trees must be >= 1")
    rng = make_rng(seed)
    forest = grow_atom_forest(X, max_depth, n_trees, rng)
    h_n = float(forest.depth_model(X.shape[0]))
    if h_n <= 0:
        raise ValueError(f"degenerate depth model: H(n) = {h_n}")
    scores = 2.0 ** (-forest.path_lengths().mean(axis=0) / h_n)
    params = {
        "max_depth": max_depth,
        "n_trees": n_trees,
        "depth_slope": forest.depth_model.slope,
        "scaled": scale,
    }
    return ScoredFollowers(account_id, "gen2out", scores, params, seed_value(seed))
