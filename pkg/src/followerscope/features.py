"""Per-follower features describing local density on the follower map.

All time-valued features are in seconds. Neighbours are the followers in a
centred window of width ``W`` (the follower itself excluded), truncated at
the ends of the map. Rank-difference weights are ``1 / (1 + |drank|)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .ingest import FollowerMap
from .scores import fmt_float

FEATURE_COLUMNS = (
    "avg_neighbor_creation_date",
    "neighbor_creation_date_range",
    "avg_distance_to_neighbors",
    "creation_date_boundary_range",
    "distance_to_upper_bound",
    "relative_rank",
)

_ROW_BLOCK = 1 << 14


@dataclass
class FeatureMatrix:
    values: np.ndarray  # (n_rows, 6)
    window_width: int
    columns: tuple[str, ...] = FEATURE_COLUMNS

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            fh.write(f"# window_width={self.window_width}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rank", *self.columns])
            for r, row in enumerate(self.values.tolist()):
                writer.writerow([r, *(fmt_float(v) for v in row)])


def rank_weights(window_width: int) -> np.ndarray:
    h = window_width // 2
    w = 1.0 / (1.0 + np.abs(np.arange(window_width) - h))
    w[h] = 0.0
    return w


def compute_features(fmap: FollowerMap, window_width: int) -> FeatureMatrix:
    if window_width < 3 or window_width % 2 == 0:
        raise ValueError(f"window_width must be odd and >= 3, got {window_width}")
    x = fmap.created_at.astype(np.float64)
    n = x.size
    if n < 2:
        raise ValueError("features need at least two followers")
    h = window_width // 2
    padded = np.concatenate([np.full(h, np.nan), x, np.full(h, np.nan)])
    view = sliding_window_view(padded, window_width)
    w = rank_weights(window_width)
    neighbor_cols = np.r_[0:h, h + 1 : window_width]

    avg_nb = np.empty(n)
    nb_range = np.empty(n)
    avg_dist = np.empty(n)
    for a in range(0, n, _ROW_BLOCK):
        block = view[a : a + _ROW_BLOCK]
        valid = ~np.isnan(block)
        vals = np.where(valid, block, 0.0)
        wv = np.where(valid, w, 0.0)
        wsum = wv.sum(axis=1)
        centre = x[a : a + block.shape[0], None]
        avg_nb[a : a + block.shape[0]] = (wv * vals).sum(axis=1) / wsum
        avg_dist[a : a + block.shape[0]] = (wv * np.abs(vals - centre)).sum(axis=1) / wsum

        nbrs = block[:, neighbor_cols]
        full = valid[:, neighbor_cols].all(axis=1)
        out = np.empty(block.shape[0])
        if full.any():
            p10, p90 = np.percentile(nbrs[full], [10, 90], axis=1)
            out[full] = p90 - p10
        for i in np.flatnonzero(~full):
            row = nbrs[i][~np.isnan(nbrs[i])]
            p10, p90 = np.percentile(row, [10, 90])
            out[i] = p90 - p10
        nb_range[a : a + block.shape[0]] = out

    ub = fmap.upper_bound.astype(np.float64)
    lb = fmap.lower_bound.astype(np.float64)
    values = np.column_stack([avg_nb, nb_range, avg_dist, ub - lb, ub - x, np.arange(n) / n])
    return FeatureMatrix(values, window_width)


def standardize(values: np.ndarray) -> np.ndarray:
    """Column-wise z-scores; constant columns map to 0."""
    values = np.asarray(values, dtype=np.float64)
    mu = values.mean(axis=0)
    sd = values.std(axis=0)
    return np.where(sd > 0, (values - mu) / np.where(sd > 0, sd, 1.0), 0.0)
