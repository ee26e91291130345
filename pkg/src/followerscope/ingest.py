"""Follower maps: loading, validation, serialization and cleaning.

A follower map is one account's follower list in follow order, each follower
carrying the creation timestamp of its own account. Timestamps are integer
seconds since the Unix epoch (UTC).
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DAY = 86_400
MIN_FOLLOWERS = 1_000
DEFAULT_JUMP_THRESHOLD = 365 * DAY
DEFAULT_LOOKAHEAD = 50


class FollowerMapError(ValueError):
    """Base class for follower-map input problems."""


class ParseError(FollowerMapError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(FollowerMapError):
    pass


def parse_timestamp(value: str | int | float) -> int:
    """Parse an RFC3339 string (or epoch number) into integer UTC seconds.

    Naive timestamps are taken as UTC; sub-second precision is truncated.
    """
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, float):
        return int(value // 1)
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp() // 1)


def format_timestamp(seconds: int) -> str:
    return datetime.fromtimestamp(int(seconds), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class FollowerRecord:
    follower_id: str
    created_at: int
    rank: int


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class FollowerMap:
    """One account's followers in follow order, stored column-wise.

    ``ranks`` holds the ranks as read (strictly increasing); positions
    ``0..n-1`` are what the scoring code works on. Arrays are read-only.
    """

    def __init__(
        self,
        account_id: str,
        follower_ids: Sequence[str] | np.ndarray,
        created_at: Sequence[int] | np.ndarray,
        collected_at: int,
        ranks: Sequence[int] | np.ndarray | None = None,
    ):
        ids = np.asarray(follower_ids, dtype=np.str_)
        created = np.asarray(created_at, dtype=np.int64)
        if created.ndim != 1 or ids.shape != created.shape:
            raise ValidationError("follower_ids and created_at must be 1-D and equally long")
        if created.size == 0:
            raise ValidationError("a follower map needs at least one follower")
        if ranks is None:
            rank_arr = np.arange(created.size, dtype=np.int64)
        else:
            rank_arr = np.asarray(ranks, dtype=np.int64)
            if rank_arr.shape != created.shape:
                raise ValidationError("ranks must match follower count")
            if rank_arr.size > 1 and np.any(np.diff(rank_arr) <= 0):
                raise ValidationError("ranks must be strictly increasing")
        self.account_id = str(account_id)
        self.collected_at = int(collected_at)
        self.follower_ids = _frozen(ids.copy())
        self.created_at = _frozen(created.copy())
        self.ranks = _frozen(rank_arr.copy())

    def __len__(self) -> int:
        return int(self.created_at.size)

    @property
    def n(self) -> int:
        return len(self)

    @cached_property
    def upper_bound(self) -> np.ndarray:
        """Running maximum of creation timestamps (the envelope)."""
        return _frozen(np.maximum.accumulate(self.created_at))

    @cached_property
    def lower_bound(self) -> np.ndarray:
        return _frozen(np.minimum.accumulate(self.created_at))

    @property
    def below_min_followers(self) -> bool:
        return len(self) < MIN_FOLLOWERS

    @property
    def is_compact(self) -> bool:
        return bool(self.ranks[0] == 0 and self.ranks[-1] == len(self) - 1)

    def records(self) -> Iterator[FollowerRecord]:
        for fid, ts, rank in zip(self.follower_ids.tolist(), self.created_at.tolist(), self.ranks.tolist()):
            yield FollowerRecord(fid, ts, rank)

    def take(self, positions: np.ndarray, compact: bool = True) -> FollowerMap:
        """Sub-map of the given positions (kept in order)."""
        positions = np.sort(np.asarray(positions, dtype=np.int64))
        return FollowerMap(
            self.account_id,
            self.follower_ids[positions],
            self.created_at[positions],
            self.collected_at,
            None if compact else self.ranks[positions],
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FollowerMap):
            return NotImplemented
        return (
            self.account_id == other.account_id
            and self.collected_at == other.collected_at
            and np.array_equal(self.ranks, other.ranks)
            and np.array_equal(self.created_at, other.created_at)
            and np.array_equal(self.follower_ids, other.follower_ids)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"FollowerMap(account_id={self.account_id!r}, n={len(self)})"


def _build_map(account_id, collected_at, rows: list[tuple[int, str, int, int]]) -> FollowerMap:
    # rows: (rank, follower_id, created_at, line_no)
    if not rows:
        raise ValidationError("no follower rows")
    rows.sort(key=lambda r: r[0])
    seen_ids: dict[str, int] = {}
    prev_rank = None
    for rank, fid, created, line in rows:
        if rank == prev_rank:
            raise ValidationError(f"duplicate rank {rank} (line {line})")
        prev_rank = rank
        if fid in seen_ids:
            raise ValidationError(f"duplicate follower_id {fid!r} (lines {seen_ids[fid]} and {line})")
        seen_ids[fid] = line
        if created > collected_at:
            raise ValidationError(
                f"created_at of follower {fid!r} (line {line}) is after the collection timestamp"
            )
    fmap = FollowerMap(
        account_id,
        [r[1] for r in rows],
        [r[2] for r in rows],
        collected_at,
        [r[0] for r in rows],
    )
    if fmap.below_min_followers:
        logger.warning(
            "account %s has %d followers (< %d); processed but flagged", account_id, len(fmap), MIN_FOLLOWERS
        )
    return fmap


def _row_values(obj: dict, line: int) -> tuple[int, str, int, int]:
    try:
        rank = obj["rank"]
        fid = obj["follower_id"]
        created = obj["created_at"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"missing field {exc}", line) from None
    try:
        rank_i = int(rank)
        if isinstance(rank, float) and rank != rank_i:
            raise ValueError(rank)
        created_i = parse_timestamp(created)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"bad value: {exc}", line) from None
    if rank_i < 0:
        raise ParseError(f"negative rank {rank_i}", line)
    return rank_i, str(fid), created_i, line


def _read_header(obj: dict, line: int) -> tuple[str, int]:
    try:
        return str(obj["account_id"]), parse_timestamp(obj["collected_at"])
    except KeyError as exc:
        raise ParseError(f"header missing {exc}", line) from None
    except (ValueError, TypeError) as exc:
        raise ParseError(f"bad header value: {exc}", line) from None


def meta_path_for(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def load_follower_map(path: str | Path, format: str | None = None) -> FollowerMap:
    """Load a follower map from JSONL (header line + rows) or CSV (+ meta sidecar)."""
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt not in ("jsonl", "csv"):
        raise ValueError(f"unknown follower-map format {fmt!r}")
    if not path.exists():
        raise FileNotFoundError(path)

    if fmt == "jsonl":
        header = None
        rows = []
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON ({exc.msg})", line_no) from None
                if not isinstance(obj, dict):
                    raise ParseError("expected a JSON object", line_no)
                if header is None:
                    header = _read_header(obj, line_no)
                    continue
                rows.append(_row_values(obj, line_no))
        if header is None:
            raise ValidationError(f"{path}: empty file")
        return _build_map(header[0], header[1], rows)

    meta = meta_path_for(path)
    if not meta.exists():
        raise ValidationError(f"missing metadata sidecar {meta}")
    account_id, collected_at = _read_header(json.loads(meta.read_text(encoding="utf-8")), 1)
    rows = []
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: empty file")
        for row in reader:
            rows.append(_row_values(row, reader.line_num))
    return _build_map(account_id, collected_at, rows)


def write_follower_map(fmap: FollowerMap, path: str | Path, format: str | None = None) -> None:
    path = Path(path)
    fmt = (format or path.suffix.lstrip(".")).lower()
    header = {"account_id": fmap.account_id, "collected_at": format_timestamp(fmap.collected_at)}
    rows = zip(fmap.ranks.tolist(), fmap.follower_ids.tolist(), fmap.created_at.tolist())
    if fmt == "jsonl":
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(header) + "\n")
            for rank, fid, ts in rows:
                fh.write(json.dumps({"rank": rank, "follower_id": fid, "created_at": format_timestamp(ts)}) + "\n")
    elif fmt == "csv":
        meta_path_for(path).write_text(json.dumps(header) + "\n", encoding="utf-8")
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rank", "follower_id", "created_at"])
            for rank, fid, ts in rows:
                writer.writerow([rank, fid, format_timestamp(ts)])
    else:
        raise ValueError(f"unknown follower-map format {fmt!r}")


# -- cleaning -----------------------------------------------------------------


@dataclass
class CleaningReport:
    removed_ranks: list[int] = field(default_factory=list)
    jump_threshold: int = DEFAULT_JUMP_THRESHOLD
    flagged_for_review: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> CleaningReport:
        data = json.loads(text)
        return cls(
            removed_ranks=[int(r) for r in data["removed_ranks"]],
            jump_threshold=int(data["jump_threshold"]),
            flagged_for_review=bool(data["flagged_for_review"]),
        )


def detect_misplaced_followers(
    fmap: FollowerMap,
    jump_threshold: int = DEFAULT_JUMP_THRESHOLD,
    lookahead: int = DEFAULT_LOOKAHEAD,
) -> CleaningReport:
    """Find followers that spike above the creation-date envelope.

    A follower is misplaced when its creation timestamp exceeds the envelope
    of the accepted followers before it by more than ``jump_threshold`` and
    each of the next ``lookahead`` followers falls back below
    ``created_at - jump_threshold``. A jump that is later sustained by other
    followers is a legitimate regime change and is kept. Any jump, confirmed
    or not, sets ``flagged_for_review``.
    """
    x = fmap.created_at.tolist()
    n = len(x)
    env = x[0]
    removed: list[int] = []
    candidates = 0
    for k in range(1, n):
        v = x[k]
        if v - env > jump_threshold:
            candidates += 1
            if n - k - 1 >= lookahead and max(x[k + 1 : k + 1 + lookahead]) < v - jump_threshold:
                removed.append(int(fmap.ranks[k]))
                continue
        if v > env:
            env = v
    return CleaningReport(removed, int(jump_threshold), candidates > 0)


def apply_cleaning(fmap: FollowerMap, report: CleaningReport) -> FollowerMap:
    """Drop the reported ranks and re-compact ranks to ``0..n'-1``."""
    if not report.removed_ranks:
        return fmap
    drop = np.asarray(report.removed_ranks, dtype=np.int64)
    pos = np.searchsorted(fmap.ranks, drop)
    bad = (pos >= len(fmap)) | (fmap.ranks[np.minimum(pos, len(fmap) - 1)] != drop)
    if np.any(bad):
        raise ValidationError(f"report references ranks not in map: {drop[bad].tolist()}")
    keep = np.ones(len(fmap), dtype=bool)
    keep[pos] = False
    if not keep.any():
        raise ValidationError("cleaning would remove every follower")
    return fmap.take(np.flatnonzero(keep))
