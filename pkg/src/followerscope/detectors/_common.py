from __future__ import annotations

import numpy as np

from ..features import FeatureMatrix, standardize


def feature_values(features: FeatureMatrix | np.ndarray, scale: bool) -> np.ndarray:
    """Feature values as a 2-D float array, z-scored per column when ``scale``."""
    values = features.values if isinstance(features, FeatureMatrix) else features
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {values.shape}")
    if values.shape[0] < 2:
        raise ValueError(f"need at least 2 rows, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise ValueError("features contain non-finite values")
    return standardize(values) if scale else values


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator) or hasattr(seed, "random"):
        return seed
    return np.random.default_rng(seed)


def seed_value(seed) -> int | None:
    return seed if isinstance(seed, (int, np.integer)) and not isinstance(seed, bool) else None
