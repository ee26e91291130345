"""Per-follower anomaly scores and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

METHODS = ("isolation_forest", "lof", "ecod", "gen2out", "sliding_histogram")
METHOD_ALIASES = {
    "if": "isolation_forest",
    "iforest": "isolation_forest",
    "lof": "lof",
    "ecod": "ecod",
    "gen2out": "gen2out",
    "sh": "sliding_histogram",
}


def canonical_method(name: str) -> str:
    name = name.strip().lower()
    name = METHOD_ALIASES.get(name, name)
    if name not in METHODS:
        raise ValueError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")
    return name


def fmt_float(v: float) -> str:
    """Byte-stable float text: 9 significant digits."""
    return format(float(v), ".9g")


@dataclass
class ScoredFollowers:
    account_id: str
    method: str
    scores: np.ndarray  # higher = more anomalous, aligned to map positions
    params: dict = field(default_factory=dict)
    seed: int | None = None
    follower_ids: np.ndarray | None = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if not np.all(np.isfinite(self.scores)):
            raise ValueError(f"{self.method}: non-finite anomaly scores")

    def __len__(self) -> int:
        return int(self.scores.size)

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            if self.follower_ids is not None:
                writer.writerow(["rank", "follower_id", "score"])
                for r, (fid, s) in enumerate(zip(self.follower_ids.tolist(), self.scores.tolist())):
                    writer.writerow([r, fid, fmt_float(s)])
            else:
                writer.writerow(["rank", "score"])
                for r, s in enumerate(self.scores.tolist()):
                    writer.writerow([r, fmt_float(s)])

    def sidecar(self) -> dict:
        return {"account_id": self.account_id, "method": self.method, "params": self.params, "seed": self.seed}

    def write(self, path: str | Path) -> None:
        """Write ``<path>`` (CSV) and ``<path stem>.params.json``."""
        path = Path(path)
        self.to_csv(path)
        path.with_name(path.stem + ".params.json").write_text(
            json.dumps(self.sidecar(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def read(cls, path: str | Path) -> ScoredFollowers:
        path = Path(path)
        side = path.with_name(path.stem + ".params.json")
        meta = json.loads(side.read_text(encoding="utf-8")) if side.exists() else {}
        ids, scores = [], []
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            has_ids = reader.fieldnames is not None and "follower_id" in reader.fieldnames
            for row in reader:
                scores.append(float(row["score"]))
                if has_ids:
                    ids.append(row["follower_id"])
        return cls(
            meta.get("account_id", path.stem),
            meta.get("method", "unknown"),
            np.asarray(scores),
            meta.get("params", {}),
            meta.get("seed"),
            np.asarray(ids, dtype=np.str_) if ids else None,
        )
