"""Incremental Sliding Histogram scoring with a compiled kernel.

The compiled ``_kernels`` extension is used when it was built; otherwise the
pure-Python ``_fallback`` kernels are selected at import. Setting
``FOLLOWERSCOPE_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from ..ingest import FollowerMap
from ..scores import ScoredFollowers
from . import _fallback
from .core import SlidingHistogramConfig, Windows, _as_timestamps, _make_scored, bin_stats

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

BACKENDS: dict[str, ModuleType] = {"python": _fallback}
if _kernels is not None:
    BACKENDS["compiled"] = _kernels

if _kernels is not None and not os.environ.get("FOLLOWERSCOPE_PURE_PYTHON"):
    DEFAULT_BACKEND = "compiled"
else:
    DEFAULT_BACKEND = "python"


def _kernel_module(backend: str | None) -> tuple[str, ModuleType]:
    name = backend or DEFAULT_BACKEND
    try:
        return name, BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def build_windows_incremental(
    source: FollowerMap | np.ndarray, cfg: SlidingHistogramConfig, backend: str | None = None
) -> Windows:
    x = _as_timestamps(source)
    cfg.n_windows(x.size)
    _, mod = _kernel_module(backend)
    lo, hi, counts = mod.window_histograms(np.ascontiguousarray(x), cfg.window_width, cfg.n_bins, cfg.stride)
    return Windows(cfg, x.size, lo, hi, counts)


def score_followers_incremental(
    source: FollowerMap | np.ndarray,
    cfg: SlidingHistogramConfig = SlidingHistogramConfig(),
    account_id: str | None = None,
    backend: str | None = None,
) -> ScoredFollowers:
    x = np.ascontiguousarray(_as_timestamps(source))
    name, mod = _kernel_module(backend)
    windows = build_windows_incremental(x, cfg, name)
    stats = bin_stats(windows.counts)

    counts = windows.counts
    n_w, nb = counts.shape
    s0 = np.zeros((n_w + 1, nb), dtype=np.int64)
    np.cumsum(counts, axis=0, out=s0[1:])
    s1 = np.zeros((n_w + 1, nb), dtype=np.int64)
    np.cumsum(counts * np.arange(n_w, dtype=np.int64)[:, None], axis=0, out=s1[1:])

    change = np.empty(n_w, dtype=bool)
    change[0] = True
    change[1:] = (windows.lo[1:] != windows.lo[:-1]) | (windows.hi[1:] != windows.hi[:-1])
    run_start = np.flatnonzero(change).astype(np.int64)
    run_end = np.append(run_start[1:] - 1, n_w - 1).astype(np.int64)
    run_id = (np.cumsum(change) - 1).astype(np.int64)

    scores = mod.score_runs(
        x,
        windows.lo,
        windows.hi,
        s0,
        s1,
        run_id,
        run_start,
        run_end,
        np.ascontiguousarray(stats.median, dtype=np.float64),
        np.ascontiguousarray(stats.iqr, dtype=np.float64),
        cfg.window_width,
        cfg.stride,
    )
    return _make_scored(source, cfg, scores, name, account_id)
