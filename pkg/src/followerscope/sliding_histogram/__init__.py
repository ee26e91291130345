from .core import (
    BinStats,
    SlidingHistogramConfig,
    WindowHistogram,
    Windows,
    bin_index,
    build_windows,
    compute_bin_scores,
    follower_weights,
    score_followers,
    window_weights,
)
from .incremental import (
    BACKENDS,
    DEFAULT_BACKEND,
    build_windows_incremental,
    score_followers_incremental,
)

__all__ = [
    "BACKENDS",
    "BinStats",
    "DEFAULT_BACKEND",
    "SlidingHistogramConfig",
    "WindowHistogram",
    "Windows",
    "bin_index",
    "build_windows",
    "build_windows_incremental",
    "compute_bin_scores",
    "follower_weights",
    "score_followers",
    "score_followers_incremental",
    "window_weights",
]
