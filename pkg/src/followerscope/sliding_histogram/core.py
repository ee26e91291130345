"""Sliding Histogram anomaly scoring.

A window of ``b`` consecutive followers slides along the rank axis. Each
window's creation-time span ``[min, max]`` is cut into ``n_bins`` equal-width
bins and the followers per bin are counted. A bin's score is its count's
distance from the cross-window median of that bin, in IQR units (both
regularized by +1). A follower's score is the average of the scores of the
bins holding it, weighted by how close it sits to each window's centre.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..ingest import FollowerMap
from ..scores import ScoredFollowers

_CHUNK_ELEMS = 1 << 22


@dataclass(frozen=True)
class SlidingHistogramConfig:
    window_width: int = 201
    n_bins: int = 10
    stride: int = 1

    def __post_init__(self):
        if self.n_bins < 2:
            raise ValueError(f"n_bins must be >= 2, got {self.n_bins}")
        if self.window_width < self.n_bins:
            raise ValueError(f"window_width ({self.window_width}) must be >= n_bins ({self.n_bins})")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")

    @property
    def center_offset(self) -> int:
        """0-based offset of the window centre from the window start."""
        return (self.window_width + 1) // 2 - 1

    def n_windows(self, n: int) -> int:
        if n < self.window_width:
            raise ValueError(f"map has {n} followers, fewer than the window width {self.window_width}")
        return (n - self.window_width) // self.stride + 1

    def as_dict(self) -> dict:
        return {"window_width": self.window_width, "n_bins": self.n_bins, "stride": self.stride}


@dataclass(frozen=True)
class WindowHistogram:
    window_index: int
    center_rank: int
    time_span: tuple[int, int]
    counts: tuple[int, ...]


class Windows:
    """All windows of one map, stored column-wise; indexable like a list."""

    def __init__(self, cfg: SlidingHistogramConfig, n: int, lo: np.ndarray, hi: np.ndarray, counts: np.ndarray):
        self.cfg = cfg
        self.n = n
        self.lo = lo
        self.hi = hi
        self.counts = counts
        self.starts = np.arange(lo.size, dtype=np.int64) * cfg.stride
        self.centers = self.starts + cfg.center_offset

    def __len__(self) -> int:
        return int(self.lo.size)

    def __getitem__(self, i: int) -> WindowHistogram:
        if i < 0:
            i += len(self)
        return WindowHistogram(
            i, int(self.centers[i]), (int(self.lo[i]), int(self.hi[i])), tuple(int(c) for c in self.counts[i])
        )

    def __iter__(self) -> Iterator[WindowHistogram]:
        for i in range(len(self)):
            yield self[i]


@dataclass(frozen=True)
class BinStats:
    median: np.ndarray
    iqr: np.ndarray


def bin_index(x: np.ndarray, lo: np.ndarray, hi: np.ndarray, n_bins: int) -> np.ndarray:
    """Equal-width bin of each timestamp in ``[lo, hi]``; last bin closed, flat span -> bin 0."""
    width = hi - lo
    flat = width <= 0
    idx = ((x - lo) * n_bins) // np.where(flat, 1, width)
    return np.where(flat, 0, np.minimum(idx, n_bins - 1))


def _as_timestamps(source) -> np.ndarray:
    if isinstance(source, FollowerMap):
        return source.created_at
    return np.ascontiguousarray(source, dtype=np.int64)


def _window_chunks(x: np.ndarray, cfg: SlidingHistogramConfig):
    n_w = cfg.n_windows(x.size)
    view = sliding_window_view(x, cfg.window_width)[:: cfg.stride][:n_w]
    step = max(1, _CHUNK_ELEMS // cfg.window_width)
    for a in range(0, n_w, step):
        yield a, view[a : a + step]


def build_windows(source: FollowerMap | np.ndarray, cfg: SlidingHistogramConfig) -> Windows:
    x = _as_timestamps(source)
    n_w = cfg.n_windows(x.size)
    nb = cfg.n_bins
    lo = np.empty(n_w, dtype=np.int64)
    hi = np.empty(n_w, dtype=np.int64)
    counts = np.empty((n_w, nb), dtype=np.int64)
    for a, block in _window_chunks(x, cfg):
        rows = block.shape[0]
        blo = block.min(axis=1)
        bhi = block.max(axis=1)
        idx = bin_index(block, blo[:, None], bhi[:, None], nb)
        idx += (np.arange(rows) * nb)[:, None]
        counts[a : a + rows] = np.bincount(idx.ravel(), minlength=rows * nb).reshape(rows, nb)
        lo[a : a + rows] = blo
        hi[a : a + rows] = bhi
    return Windows(cfg, x.size, lo, hi, counts)


def bin_stats(counts: np.ndarray) -> BinStats:
    counts = np.asarray(counts, dtype=np.float64)
    q25, med, q75 = np.percentile(counts, [25, 50, 75], axis=0)
    return BinStats(med, q75 - q25)


def compute_bin_scores(windows: Windows | np.ndarray) -> tuple[BinStats, np.ndarray]:
    """Per-bin median/IQR across windows and the bin-score matrix ``A``."""
    counts = windows.counts if isinstance(windows, Windows) else np.asarray(windows)
    if counts.ndim != 2 or counts.shape[0] < 1:
        raise ValueError("need at least one window histogram")
    stats = bin_stats(counts)
    return stats, (counts - stats.median + 1.0) / (stats.iqr + 1.0)


def window_weights(cfg: SlidingHistogramConfig) -> np.ndarray:
    """Weight of each in-window offset: ``b/2 - |offset - centre| + 1``."""
    k = np.arange(cfg.window_width)
    return cfg.window_width / 2.0 - np.abs(k - cfg.center_offset) + 1.0


def follower_weights(n: int, cfg: SlidingHistogramConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized window weights of every follower as ``(window, follower, lam)`` triples.

    ``lam`` is the offset weight divided by the follower's total weight over
    the windows containing it, so each covered follower's weights sum to 1.
    """
    n_win = cfg.n_windows(n)
    starts = np.arange(n_win, dtype=np.int64) * cfg.stride
    pos = starts[:, None] + np.arange(cfg.window_width)
    w = np.broadcast_to(window_weights(cfg), pos.shape)
    den = np.bincount(pos.ravel(), weights=w.ravel(), minlength=n)
    window = np.repeat(np.arange(n_win), cfg.window_width)
    return window, pos.ravel(), (w / den[pos]).ravel()


def _make_scored(source, cfg, scores, backend: str, account_id: str | None) -> ScoredFollowers:
    if isinstance(source, FollowerMap):
        account_id = source.account_id if account_id is None else account_id
        ids = source.follower_ids
    else:
        ids = None
    params = cfg.as_dict()
    params["backend"] = backend
    return ScoredFollowers(account_id or "", "sliding_histogram", scores, params, None, ids)


def score_followers(
    source: FollowerMap | np.ndarray, cfg: SlidingHistogramConfig = SlidingHistogramConfig(), account_id=None
) -> ScoredFollowers:
    """Window-by-window evaluation (vectorized over window blocks).

    Followers not covered by any window (only possible when ``stride`` leaves
    gaps) get the neutral score 1.
    """
    x = _as_timestamps(source)
    windows = build_windows(x, cfg)
    _, A = compute_bin_scores(windows)
    nb, b = cfg.n_bins, cfg.window_width
    w = window_weights(cfg)
    num = np.zeros(x.size)
    den = np.zeros(x.size)
    offsets = np.arange(b)
    for a, block in _window_chunks(x, cfg):
        rows = block.shape[0]
        idx = bin_index(block, windows.lo[a : a + rows, None], windows.hi[a : a + rows, None], nb)
        a_vals = np.take_along_axis(A[a : a + rows], idx, axis=1)
        pos = (windows.starts[a : a + rows, None] + offsets).ravel()
        num += np.bincount(pos, weights=(a_vals * w).ravel(), minlength=x.size)
        den += np.bincount(pos, weights=np.broadcast_to(w, (rows, b)).ravel(), minlength=x.size)
    covered = den > 0
    scores = np.ones(x.size)
    scores[covered] = num[covered] / den[covered]
    return _make_scored(source, cfg, scores, "numpy", account_id)
