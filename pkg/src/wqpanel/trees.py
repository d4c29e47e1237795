"""CART regression trees, random forest, and second-order gradient boosting.

One grower serves both modes. Raw-target trees (CART / random forest
members) are grown in gradient space with g = -y, h = 1, where the
second-order split gain reduces exactly to variance-reduction gain and
leaf weights to target means. Boosted trees use the generic gain

    1/2 * [G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - (G_L+G_R)^2/(H_L+H_R+lam)] - gamma

with leaf weight -G/(H+lam). Split candidates come from per-feature
quantile histograms computed once at fit start; when n_bins covers every
distinct value the candidates are exact midpoints, reproducing exact
greedy splits.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RegressionTree:
    """Flat node arena. feature < 0 marks a leaf; routing is x[feature] <= threshold -> left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    gain: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())


@dataclass(frozen=True)
class GradientPair:
    """First- and second-order gradients of the loss, one entry per row."""

    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if self.g.shape != self.h.shape:
            raise ValueError("g and h must have the same shape")
        if not (np.isfinite(self.g).all() and np.isfinite(self.h).all()):
            raise ValueError("non-finite gradients")
        if (self.h < 0).any():
            raise ValueError("hessian entries must be >= 0")


@dataclass(frozen=True)
class TreeParams:
    """Raw-target mode: variance-reduction splits, mean leaf values."""

    max_depth: int = 6
    min_samples_leaf: float = 1.0
    n_bins: int = 256
    max_features: int | None = None


@dataclass(frozen=True)
class GradientTreeParams:
    max_depth: int = 3
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    gamma: float = 0.0
    n_bins: int = 256


@dataclass(frozen=True)
class GossConfig:
    """Keep the top_rate fraction by |gradient|, sample other_rate of the rest."""

    top_rate: float = 0.2
    other_rate: float = 0.1

    def __post_init__(self):
        if not (0.0 <= self.top_rate <= 1.0 and 0.0 <= self.other_rate <= 1.0):
            raise ValueError("top_rate and other_rate must be in [0, 1]")
        if self.top_rate + self.other_rate > 1.0 + 1e-12:
            raise ValueError("top_rate + other_rate must be <= 1")


@dataclass(frozen=True)
class GBDTConfig:
    n_trees: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3
    min_child_weight: float = 1.0
    reg_lambda: float = 1.0
    gamma: float = 0.0
    n_bins: int = 256
    goss: GossConfig | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0:
            raise ValueError("n_trees must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_depth < 0 or self.n_bins < 1:
            raise ValueError("max_depth >= 0 and n_bins >= 1 required")
        if self.min_child_weight < 0 or self.reg_lambda < 0 or self.gamma < 0:
            raise ValueError("min_child_weight, reg_lambda, gamma must be >= 0")


@dataclass(frozen=True)
class RFConfig:
    n_trees: int = 100
    max_depth: int = 10
    min_samples_leaf: int = 1
    max_features: int | None = None  # None: use all features
    bootstrap: bool = True
    n_bins: int = 256
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


class EnsembleKind(enum.Enum):
    RANDOM_FOREST = "random_forest"
    GBDT = "gbdt"


@dataclass(frozen=True)
class Ensemble:
    """GBDT predicts base_score + lr * sum(trees); RF predicts the tree mean."""

    kind: EnsembleKind
    base_score: float
    trees: tuple[RegressionTree, ...]
    learning_rate: float = 1.0


def _candidate_thresholds(column: np.ndarray, n_bins: int) -> np.ndarray:
    """Split candidates for one feature: exact midpoints when the bins cover
    every distinct value, quantile boundaries otherwise."""
    distinct = np.unique(column)
    if len(distinct) <= 1:
        return np.empty(0)
    if len(distinct) <= n_bins:
        return (distinct[:-1] + distinct[1:]) / 2.0
    qs = np.arange(1, n_bins) / n_bins
    return np.unique(np.quantile(column, qs))


def _grow(X: np.ndarray, g: np.ndarray, h: np.ndarray, w: np.ndarray,
          max_depth: int, min_child_weight: float, reg_lambda: float,
          gamma: float, n_bins: int,
          rng: np.random.Generator | None = None,
          max_features: int | None = None) -> RegressionTree:
    n, p = X.shape
    candidates = [_candidate_thresholds(X[:, f], n_bins) for f in range(p)]
    wg = w * g
    wh = w * h

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []
    n_samples: list[int] = []
    gain: list[float] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        n_samples.append(0)
        gain.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack: list[tuple[int, np.ndarray, int]] = [(root, np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        G = float(wg[rows].sum())
        H = float(wh[rows].sum())
        value[node] = -G / (H + reg_lambda) if (H + reg_lambda) > 0 else 0.0
        n_samples[node] = len(rows)
        if depth >= max_depth or len(rows) < 2:
            continue

        if max_features is not None and max_features < p:
            feats = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            feats = np.arange(p)

        parent_score = G * G / (H + reg_lambda) if (H + reg_lambda) > 0 else 0.0
        best_gain = 0.0
        best_feat = -1
        best_thr = np.nan
        for f in feats:
            cand = candidates[f]
            if len(cand) == 0:
                continue
            bins = np.searchsorted(cand, X[rows, f], side="left")
            gsum = np.bincount(bins, weights=wg[rows], minlength=len(cand) + 1)
            hsum = np.bincount(bins, weights=wh[rows], minlength=len(cand) + 1)
            GL = np.cumsum(gsum)[:-1]
            HL = np.cumsum(hsum)[:-1]
            GR = G - GL
            HR = H - HL
            valid = (HL >= min_child_weight) & (HR >= min_child_weight) & (HL > 0) & (HR > 0)
            if not valid.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                gains = 0.5 * (GL**2 / (HL + reg_lambda) + GR**2 / (HR + reg_lambda)
                               - parent_score) - gamma
            gains[~valid] = -np.inf
            k = int(np.argmax(gains))  # first max: lowest threshold wins ties
            if gains[k] > best_gain:  # strict: lowest feature index wins ties
                best_gain = float(gains[k])
                best_feat = int(f)
                best_thr = float(cand[k])

        if best_feat < 0 or best_gain <= 0.0:
            continue
        go_left = X[rows, best_feat] <= best_thr
        left_id = new_node()
        right_id = new_node()
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = left_id
        right[node] = right_id
        gain[node] = best_gain
        stack.append((left_id, rows[go_left], depth + 1))
        stack.append((right_id, rows[~go_left], depth + 1))

    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=float),
        n_samples=np.asarray(n_samples, dtype=np.int64),
        gain=np.asarray(gain, dtype=float),
    )


def fit_tree(X, y, params: TreeParams, rng: np.random.Generator | None = None) -> RegressionTree:
    """Raw-target CART: greedy variance-reduction splits, mean leaf values."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) < 1:
        raise ValueError("fit_tree requires at least one row")
    if not np.isfinite(y).all():
        raise ValueError("non-finite targets")
    return _grow(X, -y, np.ones(len(y)), np.ones(len(y)),
                 max_depth=params.max_depth, min_child_weight=params.min_samples_leaf,
                 reg_lambda=0.0, gamma=0.0, n_bins=params.n_bins,
                 rng=rng, max_features=params.max_features)


def fit_gradient_tree(X, gradients: GradientPair, params: GradientTreeParams,
                      weights: np.ndarray | None = None) -> RegressionTree:
    """Gradient-mode tree: second-order gain, leaf weight -G/(H+lam)."""
    X = np.asarray(X, dtype=float)
    if len(X) < 1:
        raise ValueError("fit_gradient_tree requires at least one row")
    w = np.ones(len(X)) if weights is None else np.asarray(weights, dtype=float)
    return _grow(X, gradients.g, gradients.h, w,
                 max_depth=params.max_depth, min_child_weight=params.min_child_weight,
                 reg_lambda=params.reg_lambda, gamma=params.gamma, n_bins=params.n_bins)


def predict_tree(tree: RegressionTree, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    idx = np.zeros(len(X), dtype=np.int64)
    while True:
        feats = tree.feature[idx]
        active = np.nonzero(feats >= 0)[0]
        if len(active) == 0:
            break
        cur = idx[active]
        go_left = X[active, tree.feature[cur]] <= tree.threshold[cur]
        idx[active] = np.where(go_left, tree.left[cur], tree.right[cur])
    return tree.value[idx]


def goss_sample(gradients, top_rate: float, other_rate: float,
                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Gradient-based one-side sampling.

    Keeps the ceil(top_rate * n) rows with the largest |gradient| at weight
    1 (ties broken by lower row index) and draws ceil(other_rate * n) of
    the remaining rows uniformly without replacement at weight
    (1 - top_rate) / other_rate. Returns (row indices ascending, weights).
    With other_rate = 0 only the top set is returned.
    """
    mags = np.abs(np.asarray(gradients, dtype=float))
    n = len(mags)
    if n < 1:
        raise ValueError("goss_sample requires at least one row")
    if not (0.0 <= top_rate <= 1.0 and 0.0 <= other_rate <= 1.0):
        raise ValueError("rates must be in [0, 1]")
    if top_rate + other_rate > 1.0 + 1e-12:
        raise ValueError("top_rate + other_rate must be <= 1")

    order = np.argsort(-mags, kind="stable")
    n_top = int(np.ceil(top_rate * n))
    top = order[:n_top]
    rest = order[n_top:]
    if other_rate == 0.0 or len(rest) == 0:
        idx = np.sort(top)
        return idx, np.ones(len(idx))

    n_other = min(int(np.ceil(other_rate * n)), len(rest))
    sampled = rng.choice(rest, size=n_other, replace=False)
    amplification = (1.0 - top_rate) / other_rate
    idx = np.concatenate([top, sampled])
    weights = np.concatenate([np.ones(len(top)), np.full(len(sampled), amplification)])
    ascending = np.argsort(idx)
    return idx[ascending], weights[ascending]


def fit_random_forest(X, y, cfg: RFConfig) -> Ensemble:
    """Bootstrap-resampled trees with per-split feature subsampling."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if cfg.max_features is not None and not 1 <= cfg.max_features <= p:
        raise ValueError(f"max_features must be in [1, {p}]")
    params = TreeParams(max_depth=cfg.max_depth, min_samples_leaf=cfg.min_samples_leaf,
                        n_bins=cfg.n_bins, max_features=cfg.max_features)
    trees = []
    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees):
        rng = np.random.default_rng(child)
        if cfg.bootstrap:
            idx = rng.integers(0, n, size=n)
            trees.append(fit_tree(X[idx], y[idx], params, rng=rng))
        else:
            trees.append(fit_tree(X, y, params, rng=rng))
    return Ensemble(kind=EnsembleKind.RANDOM_FOREST, base_score=0.0,
                    trees=tuple(trees), learning_rate=1.0)


def fit_gbdt(X, y, cfg: GBDTConfig) -> Ensemble:
    """Second-order boosting of squared error, optionally GOSS-sampled.

    Per round: g_i = yhat_i - y_i, h_i = 1; fit a gradient tree (on the
    GOSS subset with amplification weights when enabled) and advance the
    predictions by learning_rate * tree(X).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) < 1:
        raise ValueError("fit_gbdt requires at least one row")
    params = GradientTreeParams(
        max_depth=cfg.max_depth, min_child_weight=cfg.min_child_weight,
        reg_lambda=cfg.reg_lambda, gamma=cfg.gamma, n_bins=cfg.n_bins)
    base = float(np.mean(y))
    yhat = np.full(len(y), base)
    trees = []
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees) if cfg.n_trees else []
    for child in seeds:
        g = yhat - y
        h = np.ones(len(y))
        if cfg.goss is not None:
            rng = np.random.default_rng(child)
            rows, w = goss_sample(g, cfg.goss.top_rate, cfg.goss.other_rate, rng)
            tree = fit_gradient_tree(X[rows], GradientPair(g=g[rows], h=h[rows]), params,
                                     weights=w)
        else:
            tree = fit_gradient_tree(X, GradientPair(g=g, h=h), params)
        trees.append(tree)
        yhat = yhat + cfg.learning_rate * predict_tree(tree, X)
    return Ensemble(kind=EnsembleKind.GBDT, base_score=base,
                    trees=tuple(trees), learning_rate=cfg.learning_rate)


def predict_ensemble(model: Ensemble, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if model.kind == EnsembleKind.GBDT:
        out = np.full(len(X), model.base_score)
        for tree in model.trees:
            out = out + model.learning_rate * predict_tree(tree, X)
        return out
    preds = np.stack([predict_tree(t, X) for t in model.trees])
    return preds.mean(axis=0)


def total_gain_importance(model: Ensemble, n_features: int) -> np.ndarray:
    """Summed split gain per feature over every tree in the ensemble."""
    total = np.zeros(n_features)
    for tree in model.trees:
        internal = tree.feature >= 0
        np.add.at(total, tree.feature[internal], tree.gain[internal])
    return total
