"""Ranking metrics and the benchmark harness over synthetic cases.

Ties in AUC count one half. AP and precision@k rank items by descending
score and break ties by original position (stable order).
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
from scipy.stats import rankdata

from .features import compute_features
from .pipeline import method_seed, score_map
from .scores import METHODS, canonical_method, fmt_float
from .synth import SyntheticBenchmarkCase

log = logging.getLogger(__name__)

DEFAULT_WINDOWS = (51, 101, 201)
DISPLAY_NAMES = {
    "ecod": "ECOD",
    "gen2out": "Gen2Out",
    "isolation_forest": "IsolationForest",
    "lof": "LocalOutlierFactor",
    "sliding_histogram": "SlidingHistogram",
}


def _check(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError(f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors")
    return scores, labels


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC from average ranks."""
    scores, labels = _check(scores, labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative labels")
    ranks = rankdata(scores)
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _stable_order(scores: np.ndarray) -> np.ndarray:
    return np.argsort(-scores, kind="stable")


def average_precision(scores, labels) -> float:
    scores, labels = _check(scores, labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive label")
    hits = labels[_stable_order(scores)]
    positions = np.flatnonzero(hits) + 1
    return float(np.mean(np.arange(1, n_pos + 1) / positions))


def precision_at_k(scores, labels, k: int = 50) -> float:
    scores, labels = _check(scores, labels)
    if scores.size == 0:
        raise ValueError("empty input")
    k = min(int(k), scores.size)
    return float(labels[_stable_order(scores)[:k]].mean())


@dataclass
class CaseResult:
    case_index: int
    config_id: str
    method: str
    window: int
    auc: float = math.nan
    ap: float = math.nan
    p_at_50: float = math.nan
    error: str | None = None


@dataclass
class EvalResult:
    method: str
    window: int
    auc: float
    ap: float
    p_at_50: float
    n_cases: int
    auc_std: float
    ap_std: float
    p_at_50_std: float
    n_excluded: int = 0
    errors: list[str] = field(default_factory=list)


CaseSource = Union[SyntheticBenchmarkCase, Callable[[], SyntheticBenchmarkCase]]


def evaluate_case(
    index: int, source: CaseSource, methods: Sequence[str], windows: Sequence[int], seed: int, n_bins: int, stride: int
) -> list[CaseResult]:
    """Score one case with every method at every window."""
    try:
        case = source() if callable(source) else source
    except Exception as exc:  # the case itself could not be built
        msg = f"{type(exc).__name__}: {exc}"
        return [CaseResult(index, "?", m, w, error=msg) for w in windows for m in methods]
    fmap, labels = case.injected_map, case.labels
    out = []
    for w in windows:
        feats = None
        for m in methods:
            res = CaseResult(index, case.config_id, m, w)
            try:
                if m != "sliding_histogram" and feats is None:
                    feats = compute_features(fmap, w)
                s = score_map(fmap, m, w, n_bins, stride, method_seed(seed, index, w, METHODS.index(m)), feats)
                res.auc = roc_auc(s.scores, labels)
                res.ap = average_precision(s.scores, labels)
                res.p_at_50 = precision_at_k(s.scores, labels, 50)
            except Exception as exc:
                res.error = f"{type(exc).__name__}: {exc}"
            out.append(res)
    return out


def _evaluate_star(args):
    return evaluate_case(*args)


def summarize(per_case: Sequence[CaseResult], methods: Sequence[str], windows: Sequence[int]) -> list[EvalResult]:
    results = []
    for w in windows:
        for m in methods:
            rows = [r for r in per_case if r.method == m and r.window == w]
            ok = [r for r in rows if r.error is None]
            errs = [f"case {r.case_index}: {r.error}" for r in rows if r.error is not None]

            def stat(name):
                v = np.array([getattr(r, name) for r in ok])
                return (float(v.mean()), float(v.std())) if v.size else (math.nan, math.nan)

            auc, auc_sd = stat("auc")
            ap, ap_sd = stat("ap")
            p50, p50_sd = stat("p_at_50")
            results.append(EvalResult(m, w, auc, ap, p50, len(ok), auc_sd, ap_sd, p50_sd, len(errs), errs))
    return results


def run_benchmark(
    cases: Sequence[CaseSource],
    methods: Sequence[str] = METHODS,
    windows: Sequence[int] = DEFAULT_WINDOWS,
    seed: int = 0,
    threads: int = 1,
    n_bins: int = 10,
    stride: int = 1,
    per_case: list | None = None,
) -> list[EvalResult]:
    """Per-case metrics averaged over cases (std is the population std).

    ``cases`` holds benchmark cases or zero-argument callables that build
    them. A method failing on a case is recorded and the case is left out of
    that method's average. Pass a list as ``per_case`` to collect the
    per-case rows. Results do not depend on ``threads``.
    """
    if not cases:
        raise ValueError("no benchmark cases")
    methods = [canonical_method(m) for m in methods]
    jobs = [(i, c, methods, list(windows), seed, n_bins, stride) for i, c in enumerate(cases)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(_evaluate_star, jobs))
    else:
        chunks = [_evaluate_star(j) for j in jobs]
    rows = [r for chunk in chunks for r in chunk]
    if per_case is not None:
        per_case.extend(rows)
    for r in rows:
        if r.error is not None:
            log.warning("case %d %s W%d failed: %s", r.case_index, r.method, r.window, r.error)
    return summarize(rows, methods, windows)


def format_table(results: Sequence[EvalResult]) -> str:
    """Aligned text table: one block per window, ``mean (std)`` cells."""

    def cell(mean, sd):
        return "nan" if math.isnan(mean) else f"{mean:.2f} ({sd:.2f})"

    header = ["Window", "Method", "AUC", "AP", "P@50", "Cases", "Excluded"]
    body = []
    last_w = None
    for r in sorted(results, key=lambda r: (r.window, DISPLAY_NAMES.get(r.method, r.method))):
        body.append(
            [
                f"W{r.window}" if r.window != last_w else "",
                DISPLAY_NAMES.get(r.method, r.method),
                cell(r.auc, r.auc_std),
                cell(r.ap, r.ap_std),
                cell(r.p_at_50, r.p_at_50_std),
                str(r.n_cases),
                str(r.n_excluded),
            ]
        )
        last_w = r.window
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(v.ljust(wd) for v, wd in zip(row, widths)).rstrip() for row in [header, *body]]
    return "\n".join(lines) + "\n"


RESULT_COLUMNS = ("method", "window", "auc", "auc_std", "ap", "ap_std", "p_at_50", "p_at_50_std", "n_cases", "n_excluded")


def write_results_csv(results: Sequence[EvalResult], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.method,
                    r.window,
                    *(fmt_float(getattr(r, c)) for c in RESULT_COLUMNS[2:8]),
                    r.n_cases,
                    r.n_excluded,
                ]
            )


def write_case_results_csv(rows: Sequence[CaseResult], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["case_index", "config_id", "method", "window", "auc", "ap", "p_at_50", "error"])
        for r in rows:
            writer.writerow(
                [r.case_index, r.config_id, r.method, r.window, fmt_float(r.auc), fmt_float(r.ap), fmt_float(r.p_at_50), r.error or ""]
            )
