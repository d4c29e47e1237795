"""Exact Shapley-value attribution by full coalition enumeration.

phi_i = sum over S subseteq players\\{i} of |S|!(M-|S|-1)!/M! *
[v(S u {i}) - v(S)], evaluated for every one of the 2^M coalitions.
Two value functions are provided: `marginalize` (interventional
expectation over a background sample; the default) and `retrain`
(literally refit the model on each feature subset; only sane for cheap
model families, and kept as the oracle the marginalize kind is tested
against).

Players are column groups: singleton columns by default, or whole one-hot
blocks so that a coalition toggles the entire block at once.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .features import DesignMatrix

DEFAULT_PLAYER_CAP = 15
CHEAP_REFIT_FAMILIES = ("benchmark", "elastic_net", "tree")


def _singleton_players(n_columns: int) -> list[list[int]]:
    return [[c] for c in range(n_columns)]


@dataclass(frozen=True)
class MarginalValueFunction:
    """v(S) = mean over background rows of the model applied to x with the
    features outside S replaced by the background row's values."""

    predict: Callable[[np.ndarray], np.ndarray]
    background: np.ndarray
    player_columns: list[list[int]] = field(default_factory=list)
    player_names: tuple[str, ...] = ()
    chunk_size: int = 128

    def __post_init__(self):
        if len(self.background) == 0:
            raise ValueError("marginalize value function needs a non-empty background")
        if not self.player_columns:
            object.__setattr__(self, "player_columns",
                               _singleton_players(self.background.shape[1]))
        if not self.player_names:
            object.__setattr__(self, "player_names",
                               tuple(f"f{i}" for i in range(len(self.player_columns))))

    @property
    def n_players(self) -> int:
        return len(self.player_columns)

    def values_for_masks(self, x: np.ndarray, masks: np.ndarray) -> np.ndarray:
        d = self.background.shape[1]
        col_map = np.zeros((self.n_players, d), dtype=bool)
        for p, cols in enumerate(self.player_columns):
            col_map[p, cols] = True
        values = np.empty(len(masks))
        for start in range(0, len(masks), self.chunk_size):
            chunk = masks[start:start + self.chunk_size]
            col_mask = chunk @ col_map  # bool matmul: column present in coalition
            mixed = np.where(col_mask[:, None, :], x[None, None, :],
                             self.background[None, :, :])
            preds = self.predict(mixed.reshape(-1, d)).reshape(len(chunk), -1)
            values[start:start + self.chunk_size] = preds.mean(axis=1)
        return values


@dataclass(frozen=True)
class RetrainValueFunction:
    """v(S) = prediction at x of a model refit on the feature subset S;
    v(empty) is the training-target mean."""

    fit: Callable[[np.ndarray, np.ndarray], Any]
    predict: Callable[[Any, np.ndarray], np.ndarray]
    X_train: np.ndarray
    y_train: np.ndarray
    player_columns: list[list[int]] = field(default_factory=list)
    player_names: tuple[str, ...] = ()
    family: str = "elastic_net"

    def __post_init__(self):
        if self.family not in CHEAP_REFIT_FAMILIES:
            raise ValueError(
                f"retrain value function is restricted to cheap families "
                f"{CHEAP_REFIT_FAMILIES}, got {self.family!r}")
        if not self.player_columns:
            object.__setattr__(self, "player_columns",
                               _singleton_players(self.X_train.shape[1]))
        if not self.player_names:
            object.__setattr__(self, "player_names",
                               tuple(f"f{i}" for i in range(len(self.player_columns))))

    @property
    def n_players(self) -> int:
        return len(self.player_columns)

    def values_for_masks(self, x: np.ndarray, masks: np.ndarray) -> np.ndarray:
        base = float(np.mean(self.y_train))
        values = np.empty(len(masks))
        for i, mask in enumerate(masks):
            cols = sorted(c for p in np.nonzero(mask)[0] for c in self.player_columns[p])
            if not cols:
                values[i] = base
                continue
            model = self.fit(self.X_train[:, cols], self.y_train)
            values[i] = float(self.predict(model, x[cols][None, :])[0])
        return values


@dataclass(frozen=True)
class ShapAttribution:
    feature_names: tuple[str, ...]
    phi: np.ndarray
    base_value: float
    f_x: float


def exact_shap(vf, x, cap: int = DEFAULT_PLAYER_CAP) -> ShapAttribution:
    """Exact Shapley values for one instance by full subset enumeration.

    Evaluates the value function on all 2^M coalitions (M = player count,
    capped because the cost is exponential) and aggregates the weighted
    marginal contributions. base_value is the empty coalition's value and
    base_value + sum(phi) telescopes to the full-coalition value f_x.
    """
    x = np.asarray(x, dtype=float).ravel()
    m = vf.n_players
    if m > cap:
        raise ValueError(f"{m} players exceeds the enumeration cap {cap}; "
                         f"group one-hot blocks or raise cap explicitly")

    ids = np.arange(1 << m, dtype=np.int64)
    masks = ((ids[:, None] >> np.arange(m)) & 1).astype(bool)
    values = vf.values_for_masks(x, masks)

    sizes = masks.sum(axis=1)
    fact = [math.factorial(k) for k in range(m + 1)]
    weight_by_size = np.array(
        [fact[s] * fact[m - s - 1] / fact[m] for s in range(m)]) if m else np.empty(0)

    phi = np.zeros(m)
    bits = 1 << np.arange(m, dtype=np.int64)
    for i in range(m):
        without = ids[(ids & bits[i]) == 0]
        phi[i] = np.sum(weight_by_size[sizes[without]]
                        * (values[without + bits[i]] - values[without]))
    return ShapAttribution(
        feature_names=tuple(vf.player_names), phi=phi,
        base_value=float(values[0]), f_x=float(values[-1]))


def shap_for_dataset(vf, X, cap: int = DEFAULT_PLAYER_CAP) -> list[ShapAttribution]:
    X = np.asarray(X, dtype=float)
    return [exact_shap(vf, X[r], cap=cap) for r in range(len(X))]


def mean_abs_shap(attributions: list[ShapAttribution]) -> list[tuple[str, float]]:
    """(feature, mean |phi|) pairs, descending; ties keep feature order."""
    if not attributions:
        raise ValueError("mean_abs_shap requires at least one attribution")
    names = attributions[0].feature_names
    means = np.mean([np.abs(a.phi) for a in attributions], axis=0)
    order = np.argsort(-means, kind="stable")
    return [(names[i], float(means[i])) for i in order]


def players_from_design(design: DesignMatrix) -> tuple[tuple[str, ...], list[list[int]]]:
    """Numeric columns as singleton players, each one-hot block as one player."""
    grouped = {c for cols in design.groups.values() for c in cols}
    names: list[str] = []
    columns: list[list[int]] = []
    for c, name in enumerate(design.column_names):
        if c not in grouped:
            names.append(name)
            columns.append([c])
    for group, cols in design.groups.items():
        names.append(group)
        columns.append(list(cols))
    return tuple(names), columns


def sample_background(X: np.ndarray, size: int, seed: int) -> np.ndarray:
    """Seeded uniform sample of at most `size` rows (the whole set if smaller)."""
    if len(X) <= size:
        return np.asarray(X, dtype=float).copy()
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    idx = rng.choice(len(X), size=size, replace=False)
    return np.asarray(X, dtype=float)[np.sort(idx)]


def write_mean_abs_csv(path: str | Path, ranking: list[tuple[str, float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "mean_abs_shap"])
        for name, value in ranking:
            writer.writerow([name, repr(value)])


def write_values_csv(path: str | Path, attributions: list[ShapAttribution],
                     X: np.ndarray, player_columns: list[list[int]]) -> None:
    """Per-row (feature value, phi) pairs for beeswarm-style plots.

    Multi-column players (one-hot blocks) have no scalar value; the value
    cell is left empty for those.
    """
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "feature", "value", "phi"])
        for r, attr in enumerate(attributions):
            for i, name in enumerate(attr.feature_names):
                cols = player_columns[i]
                value = repr(float(X[r, cols[0]])) if len(cols) == 1 else ""
                writer.writerow([r, name, value, repr(float(attr.phi[i]))])
