import math

import networkx as nx
import numpy as np
import pytest

from followerscope.network import (
    SharedFollowerEdge,
    SimilarityNetwork,
    accounts_followed_by_suspicious,
    all_pairs_edges,
    build_network,
    cosine,
    detect_communities,
    rank_accounts_by_anomaly,
    rank_communities,
    shared_follower_similarity,
    write_communities_csv,
    write_edges_csv,
    write_graphml,
)
from followerscope.scores import ScoredFollowers
from network_fixtures import coordination_scenario, label_agreement, planted_partition_edges


def scored(account, ids, scores, window=201, n_bins=10):
    return ScoredFollowers(
        account, "sliding_histogram", scores, {"window_width": window, "n_bins": n_bins}, follower_ids=np.array(ids)
    )


def test_cosine_examples():
    assert cosine(np.array([1.0, 2, 3]), np.array([1.0, 2, 3])) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0, 0]), np.array([0.0, 2, 0])) == 0.0
    assert cosine(np.array([1.0, 2, 3]), np.array([2.0, 4, 6])) == pytest.approx(1.0)
    assert math.isnan(cosine(np.zeros(3), np.ones(3)))


def test_cosine_positive_scaling():
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=20), rng.normal(size=20)
    assert cosine(3 * u, 0.5 * v) == pytest.approx(cosine(u, v), abs=1e-12)


def test_similarity_aligns_by_id():
    a = scored("b", ["x", "y", "z", "q"], [1.0, 2.0, 3.0, 9.0])
    b = scored("a", ["z", "w", "x", "y"], [6.0, 5.0, 2.0, 4.0])
    e = shared_follower_similarity(a, b)
    assert (e.account_a, e.account_b, e.n_shared) == ("a", "b", 3)
    assert e.similarity == pytest.approx(1.0)
    assert e.pairwise_mean_anomaly == pytest.approx((1 + 2 + 3 + 2 + 4 + 6) / 6)


def test_similarity_no_shared_followers():
    assert shared_follower_similarity(scored("a", ["x"], [1.0]), scored("b", ["y"], [1.0])) is None


def test_similarity_config_mismatch():
    with pytest.raises(ValueError):
        shared_follower_similarity(scored("a", ["x"], [1.0]), scored("b", ["x"], [1.0], window=51))


def test_negative_scores_kept():
    e = shared_follower_similarity(scored("a", ["x", "y"], [-1.0, 1.0]), scored("b", ["x", "y"], [1.0, 1.0]))
    assert e.similarity == pytest.approx(0.0, abs=1e-12)


def edge(a, b, sim, n, anomaly=1.0):
    return SharedFollowerEdge(a, b, n, sim, anomaly)


def test_build_network_thresholds():
    edges = [edge("a", "b", 0.74, 500), edge("c", "d", 0.9, 99), edge("e", "f", 0.8, 150)]
    net = build_network(edges)
    assert [(e.account_a, e.account_b) for e in net.edges] == [("e", "f")]
    assert net.nodes == ["e", "f"]


def test_build_network_monotone():
    rng = np.random.default_rng(1)
    edges = [edge(f"a{i}", f"b{i}", float(rng.random()), int(rng.integers(50, 200))) for i in range(100)]
    previous = None
    for w in (0.0, 0.3, 0.6, 0.9):
        kept = {(e.account_a, e.account_b) for e in build_network(edges, w, 100).edges}
        assert previous is None or kept <= previous
        previous = kept


def test_two_cliques():
    edges = []
    for block in ("a", "b"):
        names = [f"{block}{i}" for i in range(5)]
        edges += [edge(u, v, 0.95, 200) for i, u in enumerate(names) for v in names[i + 1 :]]
    edges.append(edge("a0", "b0", 0.76, 100))
    net = detect_communities(build_network(edges), seed=0)
    assert len(set(net.communities.values())) == 2
    assert net.members(net.communities["a0"]) == [f"a{i}" for i in range(5)]


def test_single_edge():
    net = detect_communities(build_network([edge("a", "b", 0.9, 100)]))
    assert net.communities == {"a": 0, "b": 0}


def test_empty_network():
    with pytest.raises(ValueError):
        detect_communities(build_network([edge("a", "b", 0.1, 100)]))


def test_communities_deterministic():
    edges, _ = planted_partition_edges(3)
    a = detect_communities(build_network(edges), seed=4).communities
    b = detect_communities(build_network(edges), seed=4).communities
    assert a == b


@pytest.mark.parametrize("seed", range(10))
def test_planted_partition(seed):
    edges, truth = planted_partition_edges(seed)
    net = detect_communities(build_network(edges), seed=seed)
    # isolated planted nodes drop out of the network; count them as misses
    assert label_agreement(net.communities, truth) >= 0.9


def test_rank_communities():
    net = SimilarityNetwork(
        ["a", "b", "c", "d", "e", "f", "g"],
        [edge("a", "b", 0.9, 100, 1.5), edge("c", "d", 0.9, 100, 3.0), edge("e", "f", 0.9, 100, 1.5)],
        {"a": 0, "b": 0, "c": 1, "d": 1, "e": 2, "f": 2, "g": 3},
    )
    assert rank_communities(net) == [1, 0, 2, 3]


def test_rank_accounts_modes():
    a = scored("flat", [str(i) for i in range(10)], np.ones(10))
    b = scored("batch", [str(i) for i in range(10)], [1.0] * 7 + [9.0] * 3)
    assert rank_accounts_by_anomaly([a]) == [("flat", 1.0)]
    assert [x for x, _ in rank_accounts_by_anomaly([a, b], "mean_all")] == ["batch", "flat"]
    top = rank_accounts_by_anomaly([a, b], "mean_top_n", n=3)
    assert top[0] == ("batch", 9.0)
    assert rank_accounts_by_anomaly([b], "mean_top_n", n=50) == rank_accounts_by_anomaly([b], "mean_all")
    with pytest.raises(ValueError):
        rank_accounts_by_anomaly([a], "median")


@pytest.fixture(scope="module")
def coordination():
    return coordination_scenario(seed=0)


def test_coordinated_accounts_share_one_community(coordination):
    accounts, targets, _ = coordination
    net = detect_communities(build_network(all_pairs_edges(accounts)), seed=0)
    c = net.communities[targets[0]]
    assert all(net.communities.get(t) == c for t in targets)
    assert net.members(c) == sorted(targets)
    # the decoy pair shares organic followers only, whose scores are uncorrelated
    decoys = [e for e in all_pairs_edges(accounts) if e.account_a not in targets]
    assert len(decoys) == 1 and decoys[0].n_shared == 150 and decoys[0].similarity < 0.75
    assert net.community_rank[0] == c


def test_suspicious_drilldown(coordination):
    accounts, targets, batch_ids = coordination
    hits = accounts_followed_by_suspicious(accounts[0], accounts[1:], threshold=3.0)
    assert {a for a, _ in hits} == set(targets[1:])


def test_writers(coordination, tmp_path):
    accounts, _, _ = coordination
    net = detect_communities(build_network(all_pairs_edges(accounts)), seed=0)
    write_edges_csv(net, tmp_path / "e.csv")
    write_communities_csv(net, tmp_path / "c.csv")
    write_graphml(net, tmp_path / "g.graphml")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "a,b,similarity,n_shared,pairwise_mean_anomaly"
    assert len(lines) == 1 + len(net.edges)
    g = nx.read_graphml(tmp_path / "g.graphml")
    assert sorted(g.nodes) == net.nodes
