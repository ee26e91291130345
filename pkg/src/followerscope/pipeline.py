"""Score a follower map with any of the five methods."""

from __future__ import annotations

import numpy as np

from .detectors import ecod_score, gen2out_score, isolation_forest_score, lof_score
from .features import compute_features
from .ingest import FollowerMap
from .scores import ScoredFollowers, canonical_method
from .sliding_histogram import SlidingHistogramConfig, score_followers_incremental


def score_map(
    fmap: FollowerMap,
    method: str,
    window: int = 201,
    n_bins: int = 10,
    stride: int = 1,
    seed: int | None = None,
    features=None,
) -> ScoredFollowers:
    """Score every follower of ``fmap``.

    ``window`` is the SH window width for the sliding histogram and the
    feature window for the four feature-based detectors. A precomputed
    ``features`` matrix for that window may be passed to skip recomputation.
    """
    method = canonical_method(method)
    if method == "sliding_histogram":
        cfg = SlidingHistogramConfig(window, n_bins, stride)
        return score_followers_incremental(fmap, cfg)
    if features is None:
        features = compute_features(fmap, window)
    if method == "isolation_forest":
        scored = isolation_forest_score(features, seed=seed)
    elif method == "lof":
        scored = lof_score(features)
    elif method == "ecod":
        scored = ecod_score(features)
    else:
        scored = gen2out_score(features, seed=seed)
    scored.account_id = fmap.account_id
    scored.follower_ids = fmap.follower_ids
    scored.params["window"] = window
    return scored


def method_seed(master_seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([master_seed, *keys]).generate_state(1)[0])
