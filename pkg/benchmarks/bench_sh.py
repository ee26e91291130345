"""Time the Sliding Histogram implementations against each other.

Compares the compiled incremental kernel, the pure-Python incremental
fallback and the vectorized window-by-window numpy path on simulated maps,
and checks that all three return the same scores.

    python benchmarks/bench_sh.py --sizes 10000 100000 1000000 --window 201
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from followerscope.ingest import DAY
from followerscope.sliding_histogram import BACKENDS, SlidingHistogramConfig, score_followers, score_followers_incremental
from followerscope.synth import GrowthModel, simulate_base_map


def _time(fn, repeat: int) -> tuple[float, np.ndarray]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv: list[str] | None = None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", nargs="+", type=int, default=[10_000, 100_000, 1_000_000])
    p.add_argument("--window", type=int, default=201)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--python-max", type=int, default=100_000, help="skip the pure-Python fallback above this size")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    cfg = SlidingHistogramConfig(args.window, args.bins, args.stride)
    growth = GrowthModel(1_400_000_000, 1_400_000_000 + 5 * 365 * DAY)
    impls = {"numpy": lambda x: score_followers(x, cfg).scores}
    for name in BACKENDS:
        impls[name] = lambda x, name=name: score_followers_incremental(x, cfg, backend=name).scores

    print(f"{'n':>9}  {'impl':<9} {'seconds':>9} {'followers/s':>12} {'max |diff|':>10}")
    for n in args.sizes:
        x = simulate_base_map(n, growth, seed=args.seed).created_at
        ref = None
        for name, fn in impls.items():
            if name == "python" and n > args.python_max:
                print(f"{n:>9}  {name:<9} {'skipped':>9}")
                continue
            secs, scores = _time(lambda: fn(x), 1 if name == "python" else args.repeat)
            ref = scores if ref is None else ref
            diff = float(np.abs(scores - ref).max())
            print(f"{n:>9}  {name:<9} {secs:>9.3f} {n / secs:>12.0f} {diff:>10.1e}")


if __name__ == "__main__":
    main()
