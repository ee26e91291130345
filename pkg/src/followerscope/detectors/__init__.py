"""Baseline detectors operating on per-follower feature matrices."""

from .ecod import ecod_score
from .gen2out import AtomForest, DepthModel, fit_depth_model, gen2out_score
from .iforest import isolation_forest_score
from .lof import lof_score, resolve_min_pts
from .trees import average_path_length, grow_trees

__all__ = [
    "AtomForest",
    "DepthModel",
    "average_path_length",
    "ecod_score",
    "fit_depth_model",
    "gen2out_score",
    "grow_trees",
    "isolation_forest_score",
    "lof_score",
    "resolve_min_pts",
]
