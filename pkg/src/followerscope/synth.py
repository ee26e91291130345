"""Synthetic follower maps with planted anomalous batches.

Organic maps are simulated from a follow stream; two kinds of coordinated
batches are then injected:

* Type 1: ``n1`` consecutive followers whose accounts were created around a
  common instant ``t0`` (normal spread ``sigma``).
* Type 2: each of the last ``n_recent`` envelope followers is replicated
  ``n_replica`` times right after itself, i.e. accounts that follow almost
  immediately after being created.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .followtime import envelope_points
from .ingest import DAY, FollowerMap, format_timestamp, load_follower_map, write_follower_map

HOUR = 3_600
MAX_T0_ATTEMPTS = 100


class InjectionError(ValueError):
    pass


@dataclass(frozen=True)
class GrowthModel:
    """Follow stream over ``[start, end]``.

    Organic followers' accounts are created uniformly between ``epoch`` and
    their follow time. A ``young_follower_fraction`` follow shortly after
    creation: account age at follow time is exponential with mean
    ``young_mean_age``, capped at ``young_max_age``.
    """

    start: int
    end: int
    young_follower_fraction: float = 0.15
    epoch: int | None = None
    young_mean_age: int = 6 * HOUR
    young_max_age: int = 30 * DAY

    @property
    def platform_epoch(self) -> int:
        return self.start - 5 * 365 * DAY if self.epoch is None else self.epoch


def simulate_follow_stream(
    n: int,
    growth: GrowthModel,
    seed: int | np.random.Generator | None = None,
    account_id: str = "sim",
    id_prefix: str | None = None,
) -> tuple[FollowerMap, np.ndarray]:
    """Simulate ``n`` follows; returns the map and the true follow times."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not growth.start < growth.end:
        raise ValueError("growth interval must satisfy start < end")
    epoch = growth.platform_epoch
    if epoch > growth.start:
        raise ValueError("platform epoch must not be after the follow window start")
    if not 0.0 <= growth.young_follower_fraction <= 1.0:
        raise ValueError("young_follower_fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)

    follow = np.sort(rng.integers(growth.start, growth.end + 1, size=n, dtype=np.int64))
    created = epoch + np.floor(rng.random(n) * (follow - epoch)).astype(np.int64)
    young = rng.random(n) < growth.young_follower_fraction
    age = np.minimum(rng.exponential(growth.young_mean_age, size=n), growth.young_max_age).astype(np.int64)
    created = np.where(young, np.maximum(follow - age, epoch), created)

    prefix = f"{account_id}-f" if id_prefix is None else id_prefix
    width = max(7, len(str(n - 1)))
    ids = [f"{prefix}{i:0{width}d}" for i in range(n)]
    return FollowerMap(account_id, ids, created, growth.end), follow


def simulate_base_map(
    n: int,
    growth: GrowthModel,
    seed: int | np.random.Generator | None = None,
    account_id: str = "sim",
    id_prefix: str | None = None,
) -> FollowerMap:
    return simulate_follow_stream(n, growth, seed, account_id, id_prefix)[0]


@dataclass(frozen=True)
class Type1Params:
    n1: int
    sigma: int  # seconds
    t0: int | None = None
    insertion_rank: int | None = None


@dataclass(frozen=True)
class Type2Params:
    n2: int
    n_replica: int
    jitter: int = HOUR

    @property
    def n_recent(self) -> int:
        return math.ceil(self.n2 / self.n_replica)


@dataclass
class SyntheticBenchmarkCase:
    base_map: FollowerMap
    injected_map: FollowerMap
    anomaly_type: np.ndarray  # 0 organic, 1 / 2 injected type
    config_id: str
    seed: int
    params: dict = field(default_factory=dict)

    @property
    def labels(self) -> np.ndarray:
        return self.anomaly_type > 0

    @property
    def n_anomalies(self) -> int:
        return int(np.count_nonzero(self.anomaly_type))


# -- injection on raw columns -------------------------------------------------


def _insert_type1(ids, created, types, p: Type1Params, rng, follower_ids=None, id_prefix="t1-"):
    n = created.size
    if n < 100:
        raise InjectionError(f"type-1 injection needs a map of at least 100 followers, got {n}")
    if p.n1 < 1:
        raise InjectionError("n1 must be >= 1")
    if p.sigma < 0:
        raise InjectionError("sigma must be >= 0")
    if p.insertion_rank is None:
        r = int(rng.integers(math.ceil(0.1 * n), math.floor(0.9 * n) + 1))
    else:
        r = int(p.insertion_rank)
        if not 0 <= r <= n:
            raise InjectionError(f"insertion_rank {r} outside 0..{n}")
    before = created[: max(r, 1)]
    lo, hi = int(before.min()), int(before.max())

    if p.t0 is not None:
        t0 = int(p.t0)
        vals = np.rint(rng.normal(t0, p.sigma, size=p.n1)) if p.sigma > 0 else np.full(p.n1, t0)
        vals = np.clip(vals, lo, hi).astype(np.int64)
    else:
        for _ in range(MAX_T0_ATTEMPTS):
            t0 = int(rng.integers(lo, hi + 1))
            vals = np.rint(rng.normal(t0, p.sigma, size=p.n1)) if p.sigma > 0 else np.full(p.n1, t0)
            if vals.min() >= lo and vals.max() <= hi:
                vals = vals.astype(np.int64)
                break
        else:
            raise InjectionError(
                f"could not place {p.n1} type-1 followers (sigma={p.sigma}s) inside "
                f"[{lo}, {hi}] after {MAX_T0_ATTEMPTS} t0 draws"
            )

    if follower_ids is None:
        new_ids = [f"{id_prefix}{i:06d}" for i in range(p.n1)]
    else:
        new_ids = list(follower_ids)
        if len(new_ids) != p.n1:
            raise InjectionError("follower_ids length must equal n1")
    ids = np.insert(ids, r, np.asarray(new_ids, dtype=object))
    created = np.insert(created, r, vals)
    types = np.insert(types, r, np.full(p.n1, 1, dtype=np.int8))
    resolved = {"n1": p.n1, "sigma": int(p.sigma), "t0": t0, "insertion_rank": r}
    return ids, created, types, resolved


def _insert_type2(ids, created, types, p: Type2Params, rng, id_prefix="t2-"):
    if p.n2 < 1 or p.n_replica < 1:
        raise InjectionError("n2 and n_replica must be >= 1")
    env = np.flatnonzero(envelope_points(created) & (types == 0))
    n_recent = p.n_recent
    if env.size < n_recent:
        raise InjectionError(f"map has {env.size} envelope followers, type-2 injection needs {n_recent}")
    sources = env[-n_recent:]
    counts = np.full(n_recent, p.n_replica, dtype=np.int64)
    counts[0] -= n_recent * p.n_replica - p.n2  # exact total when n2 % n_replica != 0
    positions = np.repeat(sources + 1, counts)
    offsets = rng.integers(1, max(p.jitter, 1) + 1, size=positions.size)
    vals = np.repeat(created[sources], counts) - offsets
    new_ids = np.asarray([f"{id_prefix}{i:06d}" for i in range(positions.size)], dtype=object)
    ids = np.insert(ids, positions, new_ids)
    created = np.insert(created, positions, vals)
    types = np.insert(types, positions, np.full(positions.size, 2, dtype=np.int8))
    resolved = {
        "n2": p.n2,
        "n_replica": p.n_replica,
        "n_recent": n_recent,
        "jitter": int(p.jitter),
        "source_ranks": sources.tolist(),
    }
    return ids, created, types, resolved


def _columns(fmap: FollowerMap):
    return fmap.follower_ids.astype(object), fmap.created_at.copy(), np.zeros(len(fmap), dtype=np.int8)


def _finish(base, ids, created, types, config_id, seed, params) -> SyntheticBenchmarkCase:
    injected = FollowerMap(base.account_id, ids.tolist(), created, base.collected_at)
    if len(set(injected.follower_ids.tolist())) != len(injected):
        raise InjectionError("injected follower ids collide with existing ids")
    return SyntheticBenchmarkCase(base, injected, types, config_id, int(seed), params)


def _seed_int(seed) -> int:
    if seed is None:
        return int(np.random.SeedSequence().generate_state(1)[0])
    return int(seed)


def inject_type1(
    fmap: FollowerMap, p: Type1Params, seed: int | None = None, follower_ids: Sequence[str] | None = None
) -> SyntheticBenchmarkCase:
    seed = _seed_int(seed)
    ids, created, types = _columns(fmap)
    ids, created, types, resolved = _insert_type1(
        ids, created, types, p, np.random.default_rng(seed), follower_ids, id_prefix=f"{fmap.account_id}-t1-"
    )
    cid = f"t1_n{p.n1}_s{_days(p.sigma)}"
    return _finish(fmap, ids, created, types, cid, seed, {"type1": resolved})


def inject_type2(fmap: FollowerMap, p: Type2Params, seed: int | None = None) -> SyntheticBenchmarkCase:
    seed = _seed_int(seed)
    ids, created, types = _columns(fmap)
    ids, created, types, resolved = _insert_type2(
        ids, created, types, p, np.random.default_rng(seed), id_prefix=f"{fmap.account_id}-t2-"
    )
    cid = f"t2_n{p.n2}_r{p.n_replica}"
    return _finish(fmap, ids, created, types, cid, seed, {"type2": resolved})


def inject_combined(
    fmap: FollowerMap, p1: Type1Params, p2: Type2Params, seed: int | None = None
) -> SyntheticBenchmarkCase:
    """Type-1 batch at an interior rank, Type-2 replicas at the tail, independent RNG streams."""
    seed = _seed_int(seed)
    rng1, rng2 = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    ids, created, types = _columns(fmap)
    ids, created, types, r1 = _insert_type1(ids, created, types, p1, rng1, id_prefix=f"{fmap.account_id}-t1-")
    ids, created, types, r2 = _insert_type2(ids, created, types, p2, rng2, id_prefix=f"{fmap.account_id}-t2-")
    cid = f"mix_n{p1.n1 + p2.n2}_s{_days(p1.sigma)}_r{p2.n_replica}"
    return _finish(fmap, ids, created, types, cid, seed, {"type1": r1, "type2": r2})


def _days(seconds: int) -> str:
    d = seconds / DAY
    return str(int(d)) if d == int(d) else f"{d:g}"


# -- benchmark grid -----------------------------------------------------------


@dataclass(frozen=True)
class Permutation:
    config_id: str
    type1: Type1Params | None
    type2: Type2Params | None

    def apply(self, fmap: FollowerMap, seed: int) -> SyntheticBenchmarkCase:
        if self.type1 is not None and self.type2 is not None:
            case = inject_combined(fmap, self.type1, self.type2, seed)
        elif self.type1 is not None:
            case = inject_type1(fmap, self.type1, seed)
        elif self.type2 is not None:
            case = inject_type2(fmap, self.type2, seed)
        else:
            raise ValueError("empty permutation")
        case.config_id = self.config_id
        return case


@dataclass(frozen=True)
class GridSpec:
    type1_sizes: tuple[int, ...] = (50, 100, 250, 500, 1000)
    sigmas_days: tuple[float, ...] = (10, 45, 90)
    type2_sizes: tuple[int, ...] = (50, 100, 250, 500, 1000)
    replicas: tuple[int, ...] = (5, 10)
    combined_totals: tuple[int, ...] = (50, 100, 250, 500, 1000)

    def permutations(self) -> list[Permutation]:
        perms = []
        for n1 in self.type1_sizes:
            for s in self.sigmas_days:
                sigma = int(round(s * DAY))
                perms.append(Permutation(f"t1_n{n1}_s{_days(sigma)}", Type1Params(n1, sigma), None))
        for n2 in self.type2_sizes:
            for rep in self.replicas:
                perms.append(Permutation(f"t2_n{n2}_r{rep}", None, Type2Params(n2, rep)))
        for total in self.combined_totals:
            if total % 2:
                raise ValueError(f"combined total {total} is not divisible by 2")
            for s in self.sigmas_days:
                sigma = int(round(s * DAY))
                for rep in self.replicas:
                    perms.append(
                        Permutation(
                            f"mix_n{total}_s{_days(sigma)}_r{rep}",
                            Type1Params(total // 2, sigma),
                            Type2Params(total // 2, rep),
                        )
                    )
        return perms


CANONICAL_GRID = GridSpec()


def case_seed(master_seed: int, map_index: int, perm_index: int) -> int:
    return int(np.random.SeedSequence([master_seed, map_index, perm_index]).generate_state(1)[0])


def generate_benchmark_grid(
    maps: Sequence[FollowerMap],
    grid: GridSpec = CANONICAL_GRID,
    seed: int = 0,
    permutations: Iterable[int] | None = None,
    on_infeasible: str = "raise",
) -> list[SyntheticBenchmarkCase]:
    """One case per (map, permutation).

    ``permutations`` restricts the grid to the given permutation indices, or is
    a callable ``map_index -> indices``. With ``on_infeasible="skip"``, maps
    too small for a permutation (not enough envelope followers, say) skip that
    permutation instead of raising.
    """
    if on_infeasible not in ("raise", "skip"):
        raise ValueError("on_infeasible must be 'raise' or 'skip'")
    perms = grid.permutations()
    cases = []
    for mi, fmap in enumerate(maps):
        if permutations is None:
            chosen = range(len(perms))
        elif callable(permutations):
            chosen = permutations(mi)
        else:
            chosen = permutations
        for pi in chosen:
            try:
                cases.append(perms[pi].apply(fmap, case_seed(seed, mi, pi)))
            except InjectionError:
                if on_infeasible == "raise":
                    raise
    return cases


def regenerate_case(base_map: FollowerMap, config_id: str, seed: int, grid: GridSpec = CANONICAL_GRID):
    for perm in grid.permutations():
        if perm.config_id == config_id:
            return perm.apply(base_map, seed)
    raise KeyError(config_id)


# -- serialization ------------------------------------------------------------


def write_case(case: SyntheticBenchmarkCase, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_follower_map(case.injected_map, directory / "map.jsonl")
    with (directory / "labels.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
        for rank, t in enumerate(case.anomaly_type.tolist()):
            fh.write(json.dumps({"rank": rank, "is_anomaly": t > 0, "anomaly_type": t}) + "\n")
    manifest = {
        "config_id": case.config_id,
        "seed": case.seed,
        "account_id": case.base_map.account_id,
        "n_base": len(case.base_map),
        "n_injected": case.n_anomalies,
        "collected_at": format_timestamp(case.base_map.collected_at),
        "params": case.params,
    }
    (directory / "case.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return directory


def read_case(directory: str | Path) -> SyntheticBenchmarkCase:
    directory = Path(directory)
    injected = load_follower_map(directory / "map.jsonl")
    manifest = json.loads((directory / "case.json").read_text(encoding="utf-8"))
    types = np.zeros(len(injected), dtype=np.int8)
    with (directory / "labels.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                row = json.loads(line)
                types[int(row["rank"])] = int(row["anomaly_type"])
    base = injected.take(np.flatnonzero(types == 0))
    return SyntheticBenchmarkCase(base, injected, types, manifest["config_id"], int(manifest["seed"]), manifest["params"])


# -- simulated base-map population ---------------------------------------------


@dataclass(frozen=True)
class BaseMapSpec:
    """Recipe for one simulated base map; cheap to pickle, rebuilt on demand."""

    index: int
    n: int
    growth: GrowthModel
    seed: int

    def build(self) -> FollowerMap:
        return simulate_base_map(self.n, self.growth, self.seed, account_id=f"sim{self.index:04d}")


def base_map_specs(
    n_maps: int,
    seed: int = 0,
    min_size: int = 1_000,
    max_size: int = 50_000,
    reference_end: int = 1_672_531_200,  # 2023-01-01
) -> list[BaseMapSpec]:
    """Map sizes from a power law with density ``~ n^-2`` truncated to ``[min_size, max_size]``.

    Follow windows last 2-8 years and end within the year before ``reference_end``.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5EED]))
    specs = []
    for i in range(n_maps):
        u = rng.random()
        n = int(round(1.0 / (1.0 / min_size - u * (1.0 / min_size - 1.0 / max_size))))
        years = rng.uniform(2.0, 8.0)
        end = reference_end - int(rng.integers(0, 365 * DAY))
        growth = GrowthModel(end - int(years * 365 * DAY), end, float(rng.uniform(0.05, 0.3)))
        specs.append(BaseMapSpec(i, n, growth, int(rng.integers(2**32))))
    return specs


@dataclass(frozen=True)
class CaseSpec:
    """A (base map, permutation) pair of the benchmark grid, built lazily."""

    base: BaseMapSpec
    perm_index: int
    master_seed: int = 0
    grid: GridSpec = CANONICAL_GRID

    def __call__(self) -> SyntheticBenchmarkCase:
        perm = self.grid.permutations()[self.perm_index]
        return perm.apply(self.base.build(), case_seed(self.master_seed, self.base.index, self.perm_index))


def rotating_permutations(map_index: int, per_map: int, n_perms: int = 55, step: int = 5) -> list[int]:
    """``per_map`` permutation indices for one map, rotating so maps jointly cover the grid."""
    return sorted({(map_index + step * t) % n_perms for t in range(per_map)})
