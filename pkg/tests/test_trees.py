import json

import numpy as np
import pytest

from wqpanel.families import FAMILIES
from wqpanel.trees import (Ensemble, EnsembleKind, GBDTConfig, GossConfig,
                           GradientPair, GradientTreeParams, RFConfig,
                           RegressionTree, TreeParams, fit_gbdt,
                           fit_gradient_tree, fit_random_forest, fit_tree,
                           goss_sample, predict_ensemble, predict_tree,
                           total_gain_importance)


def serialize_tree(tree: RegressionTree) -> str:
    return json.dumps(FAMILIES["gbdt"].export(
        Ensemble(kind=EnsembleKind.GBDT, base_score=0.0, trees=(tree,),
                 learning_rate=1.0)), sort_keys=True)


def sse_split_oracle(x, y):
    """Exhaustive split enumeration: best (threshold, sse_reduction)."""
    best = (None, 0.0)
    for t in sorted(set(x))[:-1]:
        left = y[x <= t]
        right = y[x > t]
        sse = ((y - y.mean()) ** 2).sum()
        red = sse - ((left - left.mean()) ** 2).sum() - ((right - right.mean()) ** 2).sum()
        if red > best[1]:
            best = (t, red)
    return best


# ------------------------------------------------------------------ fit_tree

def test_depth_zero_leaf_is_mean():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 3))
    y = rng.standard_normal(20)
    tree = fit_tree(X, y, TreeParams(max_depth=0))
    assert tree.n_nodes == 1
    assert tree.value[0] == pytest.approx(float(np.mean(y)), abs=1e-12)
    np.testing.assert_allclose(predict_tree(tree, X), np.mean(y))


def test_gradient_leaf_is_minus_g_over_h():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((15, 2))
    g = rng.standard_normal(15)
    h = np.ones(15)
    tree = fit_gradient_tree(X, GradientPair(g=g, h=h),
                             GradientTreeParams(max_depth=0, reg_lambda=0.0))
    assert tree.value[0] == pytest.approx(-g.sum() / h.sum(), abs=1e-12)


def test_step_function_split_matches_oracle():
    x = np.arange(0.1, 1.0, 0.1)
    y = (x > 0.5).astype(float)
    tree = fit_tree(x[:, None], y, TreeParams(max_depth=3))
    oracle_t, _ = sse_split_oracle(x, y)
    assert tree.feature[0] == 0
    assert 0.5 < tree.threshold[0] < 0.6
    # oracle threshold induces the same partition
    assert (x <= tree.threshold[0]).sum() == (x <= oracle_t).sum()
    preds = predict_tree(tree, x[:, None])
    np.testing.assert_allclose(preds, y)  # children pure


def test_constant_target_single_leaf():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((12, 2))
    tree = fit_tree(X, np.full(12, 1.7), TreeParams(max_depth=4))
    assert tree.n_nodes == 1


def test_accepted_split_gains_positive_and_leaf_weights_consistent():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((60, 3))
    g = rng.standard_normal(60)
    h = np.full(60, 1.0)
    lam = 0.5
    tree = fit_gradient_tree(X, GradientPair(g=g, h=h),
                             GradientTreeParams(max_depth=4, reg_lambda=lam,
                                                min_child_weight=2.0))
    internal = tree.feature >= 0
    assert (tree.gain[internal] > 0).all()
    # recompute -G/(H+lam) per leaf from the routed rows
    leaf_of = {}
    idx = np.zeros(len(X), dtype=int)
    while True:
        feats = tree.feature[idx]
        active = np.nonzero(feats >= 0)[0]
        if len(active) == 0:
            break
        cur = idx[active]
        go_left = X[active, tree.feature[cur]] <= tree.threshold[cur]
        idx[active] = np.where(go_left, tree.left[cur], tree.right[cur])
    for leaf in np.unique(idx):
        rows = idx == leaf
        expected = -g[rows].sum() / (h[rows].sum() + lam)
        assert tree.value[leaf] == pytest.approx(expected, abs=1e-10)
        assert tree.n_samples[leaf] == rows.sum()


def test_histogram_saturated_bins_match_exact_mode():
    rng = np.random.default_rng(4)
    for trial in range(20):
        n = int(rng.integers(10, 60))
        # few distinct values so modest bins saturate
        X = rng.choice(np.linspace(0, 1, 12), size=(n, 2))
        y = rng.standard_normal(n)
        exact = fit_tree(X, y, TreeParams(max_depth=4, n_bins=10**9))
        histo = fit_tree(X, y, TreeParams(max_depth=4, n_bins=16))
        assert serialize_tree(exact) == serialize_tree(histo)


def test_histogram_coarse_bins_still_valid():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((200, 2))
    y = X[:, 0] + 0.1 * rng.standard_normal(200)
    tree = fit_tree(X, y, TreeParams(max_depth=3, n_bins=8))
    preds = predict_tree(tree, X)
    assert np.isfinite(preds).all()
    assert ((y - preds) ** 2).mean() < ((y - y.mean()) ** 2).mean()


def test_equal_gain_tie_breaks_to_lower_feature_and_threshold():
    # two identical columns: every split gain ties, feature 0 must win
    rng = np.random.default_rng(60)
    col = rng.standard_normal(30)
    X = np.column_stack([col, col])
    y = (col > 0).astype(float)
    tree = fit_tree(X, y, TreeParams(max_depth=2))
    assert (tree.feature[tree.feature >= 0] == 0).all()

    # dyadic fixture where thresholds 1.5 and 2.5 tie at gain 0.75 exactly
    x = np.array([1.0, 2.0, 3.0])
    y2 = np.array([0.0, 1.0, 2.0])
    tree2 = fit_tree(x[:, None], y2, TreeParams(max_depth=1))
    assert tree2.threshold[0] == pytest.approx(1.5)


def test_monotone_feature_transform_preserves_structure():
    rng = np.random.default_rng(6)
    X = rng.standard_normal((50, 3))
    y = np.sin(X[:, 0]) + X[:, 1] * 0.5
    base = fit_tree(X, y, TreeParams(max_depth=4, n_bins=10**9))
    X2 = X.copy()
    X2[:, 0] = np.exp(X2[:, 0])  # rank-preserving
    other = fit_tree(X2, y, TreeParams(max_depth=4, n_bins=10**9))
    np.testing.assert_array_equal(base.feature, other.feature)
    np.testing.assert_array_equal(base.left, other.left)
    np.testing.assert_array_equal(base.n_samples, other.n_samples)
    np.testing.assert_allclose(base.value, other.value, atol=1e-12)


# ------------------------------------------------------------------ GOSS

def test_goss_keep_everything():
    rng = np.random.default_rng(7)
    g = rng.standard_normal(10)
    idx, w = goss_sample(g, 1.0, 0.0, rng)
    np.testing.assert_array_equal(idx, np.arange(10))
    np.testing.assert_array_equal(w, np.ones(10))


def test_goss_counts_and_amplification():
    rng = np.random.default_rng(8)
    g = np.arange(10, dtype=float)  # |g| increasing
    idx, w = goss_sample(g, 0.2, 0.3, rng)
    assert len(idx) == 5
    assert set([8, 9]) <= set(idx.tolist())  # top-2 by |g|
    top_mask = np.isin(idx, [8, 9])
    np.testing.assert_array_equal(w[top_mask], 1.0)
    np.testing.assert_allclose(w[~top_mask], 0.8 / 0.3)
    assert (~top_mask).sum() == 3


def test_goss_ties_broken_by_lower_index():
    g = np.array([1.0, 2.0, 2.0, 2.0, 0.5])
    rng = np.random.default_rng(9)
    idx, w = goss_sample(g, 0.4, 0.0, rng)  # top-2 of ties at |g|=2
    np.testing.assert_array_equal(idx, [1, 2])


def test_goss_b_zero_returns_only_top_set():
    g = np.linspace(1, 5, 10)
    idx, w = goss_sample(g, 0.3, 0.0, np.random.default_rng(0))
    assert len(idx) == 3
    np.testing.assert_array_equal(w, np.ones(3))


def test_goss_expected_weighted_sum_preserved():
    rng = np.random.default_rng(10)
    g = rng.uniform(0.5, 3.0, 10)
    total = np.abs(g).sum()
    sums = []
    for _ in range(10_000):
        idx, w = goss_sample(g, 0.2, 0.3, rng)
        sums.append(float((w * np.abs(g[idx])).sum()))
    assert np.mean(sums) == pytest.approx(total, rel=0.02)


def test_goss_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        goss_sample([], 0.2, 0.1, rng)
    with pytest.raises(ValueError):
        goss_sample([1.0], 0.7, 0.7, rng)
    with pytest.raises(ValueError):
        GossConfig(top_rate=1.2)


# ------------------------------------------------------------------ forest

def test_degenerate_forest_equals_plain_tree():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((40, 3))
    y = X[:, 0] - X[:, 2] + 0.1 * rng.standard_normal(40)
    forest = fit_random_forest(X, y, RFConfig(n_trees=1, max_depth=4,
                                              bootstrap=False, seed=5))
    tree = fit_tree(X, y, TreeParams(max_depth=4))
    np.testing.assert_array_equal(predict_ensemble(forest, X), predict_tree(tree, X))


def test_forest_prediction_within_tree_range():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((60, 3))
    y = rng.standard_normal(60)
    forest = fit_random_forest(X, y, RFConfig(n_trees=7, max_depth=3, seed=1,
                                              max_features=2))
    per_tree = np.stack([predict_tree(t, X) for t in forest.trees])
    mean = predict_ensemble(forest, X)
    assert (mean >= per_tree.min(axis=0) - 1e-12).all()
    assert (mean <= per_tree.max(axis=0) + 1e-12).all()


def test_forest_seeded_determinism_and_variation():
    rng = np.random.default_rng(13)
    X = rng.standard_normal((50, 4))
    y = rng.standard_normal(50)
    cfg = RFConfig(n_trees=5, max_depth=3, seed=42, max_features=2)
    a = fit_random_forest(X, y, cfg)
    b = fit_random_forest(X, y, cfg)
    assert json.dumps(FAMILIES["random_forest"].export(a), sort_keys=True) == \
        json.dumps(FAMILIES["random_forest"].export(b), sort_keys=True)
    c = fit_random_forest(X, y, RFConfig(n_trees=5, max_depth=3, seed=43,
                                         max_features=2))
    assert json.dumps(FAMILIES["random_forest"].export(a), sort_keys=True) != \
        json.dumps(FAMILIES["random_forest"].export(c), sort_keys=True)


def test_rf_of_identical_trees_predicts_that_tree():
    rng = np.random.default_rng(14)
    X = rng.standard_normal((30, 2))
    y = rng.standard_normal(30)
    tree = fit_tree(X, y, TreeParams(max_depth=2))
    forest = Ensemble(kind=EnsembleKind.RANDOM_FOREST, base_score=0.0,
                      trees=(tree,) * 4, learning_rate=1.0)
    np.testing.assert_allclose(predict_ensemble(forest, X), predict_tree(tree, X),
                               atol=1e-12)


# ------------------------------------------------------------------ GBDT

def test_single_stump_predicts_mean_exactly():
    # integer targets with a representable mean keep the zero-sum residual
    # identity exact in floating point
    rng = np.random.default_rng(15)
    X = rng.standard_normal((8, 2))
    y = np.array([1.0, 2.0, 3.0, 6.0, 2.0, 4.0, 5.0, 1.0])  # mean 3.0
    model = fit_gbdt(X, y, GBDTConfig(n_trees=1, max_depth=0, learning_rate=1.0,
                                      reg_lambda=0.0, min_child_weight=0.0))
    assert model.trees[0].value[0] == 0.0  # residuals of the mean sum to zero
    np.testing.assert_array_equal(predict_ensemble(model, X), np.full(8, 3.0))

    y2 = rng.standard_normal(25)
    X2 = rng.standard_normal((25, 2))
    model2 = fit_gbdt(X2, y2, GBDTConfig(n_trees=1, max_depth=0, learning_rate=1.0,
                                         reg_lambda=0.0, min_child_weight=0.0))
    np.testing.assert_allclose(predict_ensemble(model2, X2), np.mean(y2), atol=1e-12)


def test_training_rmse_monotone_non_increasing():
    rng = np.random.default_rng(16)
    X = rng.standard_normal((100, 3))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] + 0.1 * rng.standard_normal(100)
    cfg = GBDTConfig(n_trees=100, learning_rate=0.3, max_depth=2, reg_lambda=0.0,
                     min_child_weight=1.0)
    model = fit_gbdt(X, y, cfg)
    yhat = np.full(len(y), model.base_score)
    last = float(np.sqrt(np.mean((y - yhat) ** 2)))
    for tree in model.trees:
        yhat = yhat + cfg.learning_rate * predict_tree(tree, X)
        rmse = float(np.sqrt(np.mean((y - yhat) ** 2)))
        assert rmse <= last + 1e-12
        last = rmse


@pytest.mark.parametrize("goss", [GossConfig(top_rate=1.0, other_rate=0.0),
                                  GossConfig(top_rate=0.0, other_rate=1.0)])
def test_goss_degenerate_matches_plain_gbdt(goss):
    rng = np.random.default_rng(17)
    X = rng.standard_normal((60, 3))
    y = X @ [1.0, -0.5, 0.2] + 0.05 * rng.standard_normal(60)
    base_cfg = dict(n_trees=12, learning_rate=0.2, max_depth=2, seed=3)
    plain = fit_gbdt(X, y, GBDTConfig(**base_cfg))
    sampled = fit_gbdt(X, y, GBDTConfig(goss=goss, **base_cfg))
    np.testing.assert_allclose(predict_ensemble(sampled, X),
                               predict_ensemble(plain, X), atol=1e-9)


def test_gbdt_with_goss_seeded_determinism():
    rng = np.random.default_rng(18)
    X = rng.standard_normal((50, 2))
    y = rng.standard_normal(50)
    cfg = GBDTConfig(n_trees=8, max_depth=2, seed=9,
                     goss=GossConfig(top_rate=0.2, other_rate=0.3))
    a = fit_gbdt(X, y, cfg)
    b = fit_gbdt(X, y, cfg)
    assert json.dumps(FAMILIES["gbdt"].export(a), sort_keys=True) == \
        json.dumps(FAMILIES["gbdt"].export(b), sort_keys=True)


def test_predict_empty_gbdt_is_base_score():
    model = Ensemble(kind=EnsembleKind.GBDT, base_score=0.42, trees=(),
                     learning_rate=0.5)
    np.testing.assert_array_equal(predict_ensemble(model, np.zeros((3, 2))),
                                  np.full(3, 0.42))


def test_predict_single_leaf_with_shrinkage():
    leaf = RegressionTree(
        feature=np.array([-1], dtype=np.int32), threshold=np.array([np.nan]),
        left=np.array([-1], dtype=np.int32), right=np.array([-1], dtype=np.int32),
        value=np.array([2.0]), n_samples=np.array([1]), gain=np.array([0.0]))
    model = Ensemble(kind=EnsembleKind.GBDT, base_score=1.0, trees=(leaf,),
                     learning_rate=0.5)
    np.testing.assert_array_equal(predict_ensemble(model, np.zeros((2, 1))),
                                  np.full(2, 2.0))


def test_total_gain_importance_targets_informative_feature():
    rng = np.random.default_rng(19)
    X = rng.standard_normal((200, 3))
    y = 2.0 * X[:, 1] + 0.01 * rng.standard_normal(200)
    model = fit_gbdt(X, y, GBDTConfig(n_trees=20, max_depth=2, reg_lambda=0.0))
    importance = total_gain_importance(model, 3)
    assert np.argmax(importance) == 1


def test_config_validation():
    with pytest.raises(ValueError):
        GBDTConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        GBDTConfig(learning_rate=1.5)
    with pytest.raises(ValueError):
        RFConfig(n_trees=0)
    with pytest.raises(ValueError):
        fit_random_forest(np.zeros((4, 2)), np.zeros(4), RFConfig(max_features=5))
    with pytest.raises(ValueError, match="non-finite"):
        GradientPair(g=np.array([np.nan]), h=np.array([1.0]))
