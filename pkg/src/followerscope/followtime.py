"""Follow-time estimation from the creation-date envelope.

A follow can only happen after every earlier follower's account existed, so
the running maximum of creation timestamps is a lower-bound proxy for the
follow time at each rank.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .ingest import FollowerMap, ValidationError, format_timestamp


@dataclass(frozen=True)
class FollowTimeEstimate:
    rank: int
    estimated_at: int
    is_envelope_point: bool


class FollowTimeEstimates:
    """Column-wise sequence of :class:`FollowTimeEstimate`."""

    def __init__(self, ranks: np.ndarray, estimated_at: np.ndarray, is_envelope_point: np.ndarray):
        self.ranks = ranks
        self.estimated_at = estimated_at
        self.is_envelope_point = is_envelope_point

    def __len__(self) -> int:
        return int(self.estimated_at.size)

    def __getitem__(self, i: int) -> FollowTimeEstimate:
        return FollowTimeEstimate(int(self.ranks[i]), int(self.estimated_at[i]), bool(self.is_envelope_point[i]))

    def __iter__(self) -> Iterator[FollowTimeEstimate]:
        for i in range(len(self)):
            yield self[i]

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rank", "estimated_at", "is_envelope_point"])
            for r, t, e in zip(self.ranks.tolist(), self.estimated_at.tolist(), self.is_envelope_point.tolist()):
                writer.writerow([r, format_timestamp(t), "true" if e else "false"])


def envelope_points(created_at: np.ndarray) -> np.ndarray:
    """Boolean mask of strict new running maxima (ties are not envelope points)."""
    created_at = np.asarray(created_at)
    mask = np.empty(created_at.size, dtype=bool)
    if created_at.size == 0:
        return mask
    mask[0] = True
    mask[1:] = created_at[1:] > np.maximum.accumulate(created_at)[:-1]
    return mask


def estimate_follow_times(fmap: FollowerMap) -> FollowTimeEstimates:
    if len(fmap) == 0:
        raise ValidationError("cannot estimate follow times of an empty map")
    return FollowTimeEstimates(fmap.ranks, fmap.upper_bound, envelope_points(fmap.created_at))


@dataclass
class ErrorSummary:
    mean_abs_error: float  # seconds
    per_rank_errors: np.ndarray  # signed, estimated - true, seconds


def evaluate_estimation_error(
    estimates: FollowTimeEstimates | Sequence[FollowTimeEstimate], truth: Sequence[int] | np.ndarray
) -> ErrorSummary:
    if isinstance(estimates, FollowTimeEstimates):
        est = estimates.estimated_at.astype(np.int64)
    else:
        est = np.fromiter((e.estimated_at for e in estimates), dtype=np.int64)
    true = np.asarray(truth, dtype=np.int64)
    if est.shape != true.shape:
        raise ValueError(f"length mismatch: {est.size} estimates vs {true.size} true follow times")
    err = est - true
    return ErrorSummary(float(np.mean(np.abs(err))) if err.size else 0.0, err)


def year_boundaries(estimates: FollowTimeEstimates) -> list[tuple[int, int]]:
    """(year, rank) pairs marking the first rank whose estimate enters each year.

    When a flat envelope segment jumps across several years at once, every
    skipped year is placed at the same rank.
    """
    years = estimates.estimated_at.astype("datetime64[s]").astype("datetime64[Y]").astype(np.int64) + 1970
    out: list[tuple[int, int]] = []
    if years.size == 0:
        return out
    change = np.flatnonzero(years[1:] > years[:-1]) + 1
    for pos in change.tolist():
        for year in range(int(years[pos - 1]) + 1, int(years[pos]) + 1):
            out.append((year, int(estimates.ranks[pos])))
    return out
