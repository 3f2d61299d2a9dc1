"""Direct checks on the shared histogram tree builder."""

import numpy as np
import pytest

from acclaim.trees import RegressionTree, bin_features, build_tree, quantile_bin_edges


def _grow(X, targets, weights=None, max_depth=2, max_bins=32):
    w = np.ones(len(targets)) if weights is None else weights
    edges = quantile_bin_edges(X, max_bins)
    codes = bin_features(X, edges)
    return build_tree(codes, edges, grad=w * targets, hess=w, max_depth=max_depth)


def test_single_split_matches_brute_force():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(60, 2))
    y = np.sin(2 * X[:, 0]) + 0.3 * X[:, 1]
    edges = quantile_bin_edges(X, 16)
    tree = build_tree(bin_features(X, edges), edges, grad=y,
                      hess=np.ones(60), max_depth=1)
    # brute-force oracle: scan every candidate (feature, edge) for the best
    # second-order gain G_L^2/n_L + G_R^2/n_R
    best = -np.inf
    for j in range(2):
        for threshold in edges[j]:
            left = X[:, j] < threshold
            if left.sum() == 0 or left.sum() == len(y):
                continue
            gain = y[left].sum() ** 2 / left.sum() + y[~left].sum() ** 2 / (~left).sum()
            best = max(best, gain)
    feat, thr = tree.feature[0], tree.threshold[0]
    left = X[:, feat] < thr
    got = y[left].sum() ** 2 / left.sum() + y[~left].sum() ** 2 / (~left).sum()
    assert got == pytest.approx(best, abs=1e-12)
    # and the leaves carry the child means
    assert tree.predict(X[left]).mean() == pytest.approx(y[left].mean())


def test_leaf_value_is_weighted_mean():
    X = np.zeros((6, 1))  # no possible split
    y = np.array([1.0, 1.0, 4.0, 4.0, 4.0, 10.0])
    w = np.array([1.0, 1.0, 2.0, 2.0, 2.0, 0.0])
    tree = _grow(X, y, weights=w, max_depth=3)
    expected = (w * y).sum() / w.sum()
    assert np.allclose(tree.predict(X), expected)


def test_depth_limit_respected():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(300, 4))
    y = rng.normal(size=300)
    tree = _grow(X, y, max_depth=2)
    n_internal = int((~tree.is_leaf).sum())
    assert n_internal <= 3  # root plus at most two children at depth 2


def test_deterministic_ties_prefer_lowest_feature():
    # two identical features: splits must always pick feature 0
    rng = np.random.default_rng(5)
    x = rng.normal(size=120)
    X = np.column_stack([x, x])
    y = (x > 0).astype(float) * 2 - 1
    tree = _grow(X, y, max_depth=3)
    assert set(tree.feature[~tree.is_leaf]) == {0}


def test_serialization_arrays_round_trip():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(150, 3))
    y = np.sin(X[:, 0])
    tree = _grow(X, y, max_depth=4)
    clone = RegressionTree.from_arrays(tree.to_arrays())
    assert np.array_equal(clone.predict(X), tree.predict(X))


def test_constant_feature_never_split():
    rng = np.random.default_rng(9)
    X = np.column_stack([np.ones(80), rng.normal(size=80)])
    y = X[:, 1].copy()
    tree = _grow(X, y, max_depth=3)
    assert 0 not in set(tree.feature[~tree.is_leaf])
