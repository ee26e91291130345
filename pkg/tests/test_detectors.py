import logging
import math

import numpy as np
import pytest

from followerscope.detectors import (
    AtomForest,
    DepthModel,
    average_path_length,
    ecod_score,
    fit_depth_model,
    gen2out_score,
    grow_trees,
    isolation_forest_score,
    lof_score,
    resolve_min_pts,
)
from followerscope.detectors.trees import GROWERS
from followerscope.features import compute_features


class HalfRng:
    """Generator stand-in: every uniform draw is 0.5, so every split is a midpoint."""

    def random(self, size=None):
        return np.full(size, 0.5)

    def permutation(self, n):
        return np.arange(n)


def cluster_with_outlier(n=500, seed=0, far=20.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    return np.vstack([X, [[far, far]]])


# -- isolation trees -----------------------------------------------------------


def test_average_path_length():
    assert average_path_length([0, 1, 2]).tolist() == [0.0, 0.0, 1.0]
    m = 256
    assert average_path_length(m) == pytest.approx(2 * (math.log(m - 1) + 0.5772156649015329) - 2 * (m - 1) / m)


def test_if_hand_traced_tree():
    # midpoint splits on [0..6, 20], depth limit 3:
    # 20 isolated at depth 1; 0 at depth 3; {1,2}, {3,4}, {5,6} stop at depth 3 with 2 points
    X = np.array([0, 1, 2, 3, 4, 5, 6, 20], dtype=float)[:, None]
    s = isolation_forest_score(X, n_trees=1, subsample=8, seed=HalfRng(), scale=False).scores
    c8 = 3.2962516279136924  # 2 (ln 7 + gamma) - 2 * 7 / 8
    expected = [2 ** (-3 / c8)] + [2 ** (-4 / c8)] * 6 + [2 ** (-1 / c8)]
    np.testing.assert_allclose(s, expected, rtol=1e-12)
    np.testing.assert_allclose(expected, [0.5321390962382649] + [0.4312213189515269] * 6 + [0.8103545144490715])


def test_if_outlier_max():
    X = cluster_with_outlier(200, seed=1)
    s = isolation_forest_score(X, seed=0).scores
    assert int(np.argmax(s)) == 200
    assert np.all((s > 0) & (s < 1))


def test_if_duplicates_close():
    X = cluster_with_outlier(300, seed=2)
    X = np.vstack([X, X[:1]])
    s = isolation_forest_score(X, seed=3).scores
    assert abs(s[0] - s[-1]) < 0.02


def test_if_subsample_clamped(caplog):
    X = np.random.default_rng(0).normal(size=(50, 2))
    with caplog.at_level(logging.WARNING):
        s = isolation_forest_score(X, subsample=256, seed=0)
    assert s.params["subsample"] == 50
    assert "exceeds" in caplog.text


def test_if_deterministic():
    X = cluster_with_outlier(300, seed=4)
    a = isolation_forest_score(X, seed=7).scores
    assert np.array_equal(a, isolation_forest_score(X, seed=7).scores)
    assert not np.array_equal(a, isolation_forest_score(X, seed=8).scores)


def test_if_needs_two_rows():
    with pytest.raises(ValueError):
        isolation_forest_score(np.zeros((1, 3)), seed=0)


def test_tree_backends_identical():
    if "compiled" not in GROWERS:
        pytest.skip("compiled tree grower not built")
    X = np.random.default_rng(0).normal(size=(700, 4))
    X[:50] = X[0]  # duplicate rows exercise the identical-sample stop
    for kw in (dict(sample_size=64, max_depth=6), dict(max_depth=10), dict()):
        a = grow_trees(X, 7, np.random.default_rng(1), backend="numpy", **kw)
        b = grow_trees(X, 7, np.random.default_rng(1), backend="compiled", **kw)
        assert all(np.array_equal(u, v) for u, v in zip(a, b))


def test_tree_row_order_invariant():
    X = np.random.default_rng(5).normal(size=(300, 3))
    perm = np.random.default_rng(6).permutation(300)
    d, s = grow_trees(X, 5, np.random.default_rng(2), max_depth=10)
    dp, sp = grow_trees(X[perm], 5, np.random.default_rng(2), max_depth=10)
    assert np.array_equal(d[:, perm], dp) and np.array_equal(s[:, perm], sp)


# -- LOF ---------------------------------------------------------------------------


def test_lof_hand_fixture():
    # k = 2 on 1-D points; k-distances 3, 2, 3, 5, 9, 23
    # lrd = 1 / mean reach-dist: 2/5, 1/3, 2/5, 2/13, 1/7, 2/41
    X = np.array([0, 1, 3, 7, 12, 30], dtype=float)[:, None]
    s = lof_score(X, min_pts=2, scale=False).scores
    np.testing.assert_allclose(s, [11 / 12, 6 / 5, 11 / 12, 247 / 140, 126 / 65, 1107 / 364], rtol=1e-8)


def test_lof_uniform_grid_interior():
    g = np.stack(np.meshgrid(np.arange(30.0), np.arange(30.0)), -1).reshape(-1, 2)
    s = lof_score(g, min_pts=8, scale=False).scores
    interior = (g[:, 0] > 4) & (g[:, 0] < 25) & (g[:, 1] > 4) & (g[:, 1] < 25)
    assert np.all((s[interior] >= 0.9) & (s[interior] <= 1.1))


def test_lof_outlier_max():
    s = lof_score(cluster_with_outlier(300, seed=3), min_pts=5).scores
    assert int(np.argmax(s)) == 300


def test_lof_min_pts_resolution():
    assert resolve_min_pts(0.03, 1000) == 30
    assert resolve_min_pts(0.03, 1001) == 31
    assert resolve_min_pts(0.03, 10) == 2
    assert resolve_min_pts(5, 10) == 5


def test_lof_too_few_rows():
    with pytest.raises(ValueError, match="n_rows=5, min_pts=5"):
        lof_score(np.random.default_rng(0).normal(size=(5, 2)), min_pts=5)


def test_lof_duplicates_finite():
    X = np.vstack([np.zeros((10, 2)), np.random.default_rng(0).normal(size=(40, 2))])
    s = lof_score(X, min_pts=3).scores
    assert np.all(np.isfinite(s))
    assert np.allclose(s[:10], s[0])


# -- ECOD --------------------------------------------------------------------------


def test_ecod_right_tail():
    # in one dimension the two extremes have equal tail probability 1/n
    s = ecod_score(np.array([1.0, 2.0, 3.0, 100.0])[:, None]).scores
    np.testing.assert_allclose(s, [math.log(4), math.log(2), math.log(2), math.log(4)], rtol=1e-12)


@pytest.mark.filterwarnings("ignore:Precision loss")
def test_ecod_identical_rows():
    s = ecod_score(np.ones((6, 3))).scores
    assert np.all(s == s[0]) and s[0] == 0.0


def test_ecod_hand_fixture():
    # column 0 skews right (right tail used), column 1 skews left (left tail used)
    X = np.array([[1, 50], [2, 48], [3, 47], [4, 45], [100, 1]], dtype=float)
    s = ecod_score(X).scores
    expected = [math.log(5), -math.log(0.4 * 0.8), -2 * math.log(0.6), -2 * math.log(0.4), -2 * math.log(0.2)]
    np.testing.assert_allclose(s, expected, rtol=1e-12)


def test_ecod_more_extreme_never_drops():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(200, 3))
    before = ecod_score(X).scores
    X2 = X.copy()
    X2[17, 1] = X[:, 1].max() + 5
    after = ecod_score(X2).scores
    assert (after > after[17]).sum() <= (before > before[17]).sum()


# -- Gen2Out -----------------------------------------------------------------------


def test_gen2out_formulas():
    model = DepthModel(1.3)
    assert model(1) == 0.0
    n = 64
    h_n = float(model(n))
    # a point with E[h] = H(n) scores exactly 1/2
    assert 2 ** (-h_n / h_n) == 0.5
    # isolated at depth 1 with a single point left: h = 1 + H(1) = 1
    forest = AtomForest(model, 10, np.ones((3, 1), dtype=np.int64), np.ones((3, 1), dtype=np.int64))
    assert forest.path_lengths().mean() == 1.0


def test_gen2out_slope_uniform():
    X = np.random.default_rng(0).random((1024, 1))
    slope = fit_depth_model(X, np.random.default_rng(1)).slope
    assert 0.8 <= slope <= 1.6


def test_gen2out_outlier_max():
    s = gen2out_score(cluster_with_outlier(300, seed=5), seed=0)
    assert int(np.argmax(s.scores)) == 300
    assert s.params["depth_slope"] > 0


def test_gen2out_needs_two_rows():
    with pytest.raises(ValueError):
        gen2out_score(np.zeros((1, 2)), seed=0)


def test_gen2out_duplicate_does_not_raise_cluster_max():
    X = cluster_with_outlier(300, seed=6)
    a = gen2out_score(X, seed=1).scores[:300].max()
    b = gen2out_score(np.vstack([X, X[:1]]), seed=1).scores[:300].max()
    assert b <= a + 0.05


# -- shared properties -------------------------------------------------------------


DETERMINISTIC = {
    "lof": lambda X: lof_score(X, min_pts=5),
    "ecod": ecod_score,
}
SEEDED = {
    "isolation_forest": lambda X: isolation_forest_score(X, seed=0),
    "gen2out": lambda X: gen2out_score(X, seed=0),
}


@pytest.mark.parametrize("name", sorted(DETERMINISTIC))
def test_row_equivariance_exact(name):
    X = cluster_with_outlier(200, seed=8)
    perm = np.random.default_rng(1).permutation(len(X))
    f = DETERMINISTIC[name]
    np.testing.assert_allclose(f(X[perm]).scores, f(X).scores[perm], rtol=1e-12)


@pytest.mark.parametrize("name", sorted(SEEDED))
def test_row_equivariance_seeded(name):
    X = cluster_with_outlier(300, seed=8)
    perm = np.random.default_rng(1).permutation(len(X))
    f = SEEDED[name]
    a, b = f(X).scores[perm], f(X[perm]).scores
    assert np.abs(a - b).max() < 0.05
    assert int(np.argmax(b)) == int(np.argmax(a))


def test_feature_matrix_input(sim_map):
    F = compute_features(sim_map.take(np.arange(2000)), 51)
    for f in (ecod_score, lambda F: lof_score(F), lambda F: isolation_forest_score(F, seed=0)):
        s = f(F)
        assert s.scores.shape == (2000,) and np.all(np.isfinite(s.scores))
