"""Plot-ready 2-D grids over (follow rank, account creation time)."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import FollowerMap
from .scores import ScoredFollowers, fmt_float

KINDS = ("mean_anomaly_score", "shared_follower_ratio", "count")


@dataclass
class HeatmapGrid:
    x_edges: np.ndarray  # rank bin edges
    y_edges: np.ndarray  # creation-time bin edges (seconds)
    values: np.ndarray  # (nx, ny); NaN marks cells without followers
    value_kind: str

    def to_csv(self, path: str | Path) -> None:
        """Two header rows with the x and y edges, then one row per x bin; empty cells blank."""
        with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# value_kind={self.value_kind}\n")
            fh.write("x_edges," + ",".join(fmt_float(v) for v in self.x_edges) + "\n")
            fh.write("y_edges," + ",".join(fmt_float(v) for v in self.y_edges) + "\n")
            for i, row in enumerate(self.values):
                cells = ("" if np.isnan(v) else fmt_float(v) for v in row)
                fh.write(f"{i}," + ",".join(cells) + "\n")


def _edges(lo: float, hi: float, n: int) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n + 1)


def _cell_index(v: np.ndarray, edges: np.ndarray) -> np.ndarray:
    n = edges.size - 1
    return np.clip(np.searchsorted(edges, v, side="right") - 1, 0, n - 1)


def export_heatmap(
    fmap: FollowerMap,
    scored: ScoredFollowers | set | frozenset | None = None,
    grid: tuple[int, int] = (200, 200),
    kind: str = "mean_anomaly_score",
) -> HeatmapGrid:
    """Aggregate followers into a ``grid`` of (rank, created_at) cells.

    ``mean_anomaly_score`` averages ``scored.scores``; ``shared_follower_ratio``
    is the share of a cell's followers whose id is in the set ``scored``;
    ``count`` counts followers. The last bin on each axis is closed.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown heatmap kind {kind!r}")
    nx_, ny = grid
    if nx_ < 1 or ny < 1:
        raise ValueError("grid dimensions must be positive")
    n = len(fmap)
    ranks = np.arange(n, dtype=np.float64)
    x_edges = _edges(0.0, float(max(n - 1, 0)), nx_)
    t = fmap.created_at.astype(np.float64)
    y_edges = _edges(float(t.min()), float(t.max()), ny)
    cell = _cell_index(ranks, x_edges) * ny + _cell_index(t, y_edges)
    counts = np.bincount(cell, minlength=nx_ * ny).astype(np.float64)

    if kind == "count":
        agg = counts
    elif kind == "mean_anomaly_score":
        if not isinstance(scored, ScoredFollowers):
            raise ValueError("mean_anomaly_score needs scored followers")
        if scored.scores.size != n:
            raise ValueError(f"{scored.scores.size} scores for a map of {n} followers")
        agg = np.bincount(cell, weights=scored.scores, minlength=nx_ * ny)
    else:
        if scored is None or isinstance(scored, ScoredFollowers):
            raise ValueError("shared_follower_ratio needs a set of shared follower ids")
        hit = np.isin(fmap.follower_ids.astype(str), np.array(sorted(scored), dtype=str))
        agg = np.bincount(cell, weights=hit.astype(np.float64), minlength=nx_ * ny)

    values = np.full(nx_ * ny, np.nan)
    occupied = counts > 0
    values[occupied] = agg[occupied] if kind == "count" else agg[occupied] / counts[occupied]
    return HeatmapGrid(x_edges, y_edges, values.reshape(nx_, ny), kind)
