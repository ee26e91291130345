"""Cross-account similarity network over shared anomalous followers.

Two accounts are linked by the cosine similarity of the anomaly scores their
shared followers received on each account. Edges below a similarity or
shared-follower threshold are dropped, Louvain communities are found on the
remaining weighted graph, and communities are ranked by how anomalous their
edges are.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import networkx as nx
import numpy as np

from .followtime import estimate_follow_times
from .ingest import FollowerMap
from .scores import ScoredFollowers, fmt_float

DEFAULT_WEIGHT_MIN = 0.75
DEFAULT_SHARED_MIN = 100
DEFAULT_SUSPICIOUS_SCORE = 3.0
DEFAULT_SUSPICIOUS_FRACTION = 0.3


@dataclass(frozen=True)
class SharedFollowerEdge:
    account_a: str
    account_b: str
    n_shared: int
    similarity: float
    pairwise_mean_anomaly: float


@dataclass
class SimilarityNetwork:
    nodes: list[str]
    edges: list[SharedFollowerEdge]
    communities: dict[str, int] = field(default_factory=dict)
    community_rank: list[int] = field(default_factory=list)

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for e in self.edges:
            g.add_edge(e.account_a, e.account_b, weight=e.similarity)
        return g

    def members(self, community: int) -> list[str]:
        return sorted(a for a, c in self.communities.items() if c == community)


def _ids(scored: ScoredFollowers) -> np.ndarray:
    if scored.follower_ids is None:
        raise ValueError(f"account {scored.account_id!r}: scores carry no follower ids")
    return np.asarray(scored.follower_ids).astype(str)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return math.nan
    return float(np.dot(u, v) / (nu * nv))


def shared_follower_similarity(a: ScoredFollowers, b: ScoredFollowers) -> SharedFollowerEdge | None:
    """Edge between two accounts, or None when they share no followers.

    Shared followers are aligned by sorted follower id. The pairwise mean is
    over the entries of both score vectors.
    """
    if a.params.get("window_width") != b.params.get("window_width") or a.params.get("n_bins") != b.params.get("n_bins"):
        raise ValueError("accounts were scored with different configurations")
    ida, idb = _ids(a), _ids(b)
    shared, ia, ib = np.intersect1d(ida, idb, assume_unique=True, return_indices=True)
    if shared.size == 0:
        return None
    u, v = a.scores[ia], b.scores[ib]
    sim = cosine(u, v)
    if math.isnan(sim):
        return None
    pa, pb = sorted((a.account_id, b.account_id))
    return SharedFollowerEdge(pa, pb, int(shared.size), sim, float((u.sum() + v.sum()) / (2 * shared.size)))


def all_pairs_edges(scored: Sequence[ScoredFollowers]) -> list[SharedFollowerEdge]:
    edges = []
    for a, b in combinations(scored, 2):
        e = shared_follower_similarity(a, b)
        if e is not None:
            edges.append(e)
    edges.sort(key=lambda e: (e.account_a, e.account_b))
    return edges


def build_network(
    edges: Sequence[SharedFollowerEdge], weight_min: float = DEFAULT_WEIGHT_MIN, shared_min: int = DEFAULT_SHARED_MIN
) -> SimilarityNetwork:
    """Keep edges with similarity >= weight_min and n_shared >= shared_min; drop isolated nodes."""
    kept = [e for e in edges if e.similarity >= weight_min and e.n_shared >= shared_min]
    kept.sort(key=lambda e: (e.account_a, e.account_b))
    nodes = sorted({e.account_a for e in kept} | {e.account_b for e in kept})
    return SimilarityNetwork(nodes, kept)


def detect_communities(net: SimilarityNetwork, seed: int = 0, resolution: float = 1.0) -> SimilarityNetwork:
    """Louvain communities on similarity weights.

    Community ids are 0, 1, ... ordered by each community's smallest account id,
    so they depend only on the partition.
    """
    if not net.nodes:
        raise ValueError("cannot detect communities on an empty network")
    parts = nx.community.louvain_communities(net.graph(), weight="weight", resolution=resolution, seed=seed)
    parts = sorted((sorted(p) for p in parts), key=lambda p: p[0])
    net.communities = {a: cid for cid, p in enumerate(parts) for a in p}
    net.community_rank = rank_communities(net)
    return net


def community_scores(net: SimilarityNetwork) -> dict[int, float]:
    """Mean pairwise_mean_anomaly over each community's internal edges (0 if none)."""
    sums: dict[int, list[float]] = {c: [] for c in set(net.communities.values())}
    for e in net.edges:
        ca, cb = net.communities.get(e.account_a), net.communities.get(e.account_b)
        if ca is not None and ca == cb:
            sums[ca].append(e.pairwise_mean_anomaly)
    return {c: (float(np.mean(v)) if v else 0.0) for c, v in sums.items()}


def rank_communities(net: SimilarityNetwork) -> list[int]:
    """Descending by internal-edge anomaly; singletons score 0; ties by community id."""
    scores = community_scores(net)
    internal = {c: False for c in scores}
    for e in net.edges:
        ca = net.communities.get(e.account_a)
        if ca is not None and ca == net.communities.get(e.account_b):
            internal[ca] = True
    return sorted(scores, key=lambda c: (not internal[c], -scores[c], c))


def rank_accounts_by_anomaly(
    scored: Sequence[ScoredFollowers], mode: str = "mean_all", n: int = 1000
) -> list[tuple[str, float]]:
    """Accounts by mean follower score (``mean_all``) or mean of the top ``n`` scores."""
    if mode not in ("mean_all", "mean_top_n"):
        raise ValueError(f"unknown mode {mode!r}")
    out = []
    for s in scored:
        v = s.scores
        if mode == "mean_top_n" and n < v.size:
            v = np.partition(v, v.size - n)[v.size - n :]
        out.append((s.account_id, float(v.mean())))
    return sorted(out, key=lambda t: -t[1])


def suspicious_followers(scored: ScoredFollowers, threshold: float = DEFAULT_SUSPICIOUS_SCORE) -> np.ndarray:
    """Follower ids scoring at or above ``threshold``."""
    return _ids(scored)[scored.scores >= threshold]


def accounts_followed_by_suspicious(
    target: ScoredFollowers,
    others: Sequence[ScoredFollowers],
    threshold: float = DEFAULT_SUSPICIOUS_SCORE,
    min_fraction: float = DEFAULT_SUSPICIOUS_FRACTION,
) -> list[tuple[str, float]]:
    """Other accounts followed by at least ``min_fraction`` of ``target``'s suspicious followers.

    Returns ``(account_id, fraction)`` pairs, highest fraction first.
    """
    sus = suspicious_followers(target, threshold)
    if sus.size == 0:
        return []
    out = []
    for o in others:
        if o.account_id == target.account_id:
            continue
        frac = float(np.isin(sus, _ids(o)).mean())
        if frac >= min_fraction:
            out.append((o.account_id, frac))
    return sorted(out, key=lambda t: (-t[1], t[0]))


def follow_times_of(fmaps: Sequence[FollowerMap], follower_ids) -> list[tuple[str, str, int, int]]:
    """``(account_id, follower_id, rank, estimated_follow_time)`` for the given followers on each map."""
    wanted = np.array(sorted(set(follower_ids)), dtype=str)
    rows = []
    for fmap in fmaps:
        est = estimate_follow_times(fmap).estimated_at
        ids = fmap.follower_ids.astype(str)
        for r in np.flatnonzero(np.isin(ids, wanted)).tolist():
            rows.append((fmap.account_id, ids[r], r, int(est[r])))
    return rows


def write_edges_csv(net: SimilarityNetwork, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "similarity", "n_shared", "pairwise_mean_anomaly"])
        for e in net.edges:
            w.writerow([e.account_a, e.account_b, fmt_float(e.similarity), e.n_shared, fmt_float(e.pairwise_mean_anomaly)])


def write_communities_csv(net: SimilarityNetwork, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["account_id", "community"])
        for a in sorted(net.communities):
            w.writerow([a, net.communities[a]])


def write_community_rank_csv(net: SimilarityNetwork, path: str | Path) -> None:
    scores = community_scores(net)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["position", "community", "mean_pairwise_anomaly", "members"])
        for pos, c in enumerate(net.community_rank):
            w.writerow([pos, c, fmt_float(scores[c]), " ".join(net.members(c))])


def write_graphml(net: SimilarityNetwork, path: str | Path) -> None:
    g = net.graph()
    for a, c in net.communities.items():
        g.nodes[a]["community"] = c
    nx.write_graphml(g, str(path))
