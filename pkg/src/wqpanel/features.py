"""Design-matrix assembly for the three input strategies.

Strategy 1: raw numeric features. Strategy 2: the same features
standardized with train-fitted z-scores. Strategy 3: standardized numerics
plus one-hot spatio-temporal categoricals.
"""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field

import numpy as np

from .panel import StackedTable


class Season(enum.Enum):
    WINTER = "Winter"
    SPRING = "Spring"
    SUMMER = "Summer"
    FALL = "Fall"


# meteorological convention: Dec-Feb, Mar-May, Jun-Aug, Sep-Nov
_MONTH_SEASON = {
    12: Season.WINTER, 1: Season.WINTER, 2: Season.WINTER,
    3: Season.SPRING, 4: Season.SPRING, 5: Season.SPRING,
    6: Season.SUMMER, 7: Season.SUMMER, 8: Season.SUMMER,
    9: Season.FALL, 10: Season.FALL, 11: Season.FALL,
}

MONTH_VOCAB = tuple(range(1, 13))
WEEKDAY_VOCAB = tuple(range(7))  # Monday = 0
SEASON_VOCAB = (Season.WINTER, Season.SPRING, Season.SUMMER, Season.FALL)


@dataclass(frozen=True)
class TemporalFeatures:
    year: int
    month: int
    day: int
    weekday: int  # Monday = 0
    iso_week: int
    season: Season


def decompose_date(date: dt.date) -> TemporalFeatures:
    """Split a calendar date into the temporal feature set."""
    return TemporalFeatures(
        year=date.year,
        month=date.month,
        day=date.day,
        weekday=date.weekday(),
        iso_week=date.isocalendar()[1],
        season=_MONTH_SEASON[date.month],
    )


class UnseenLabelError(ValueError):
    """A label at transform time is absent from the fitted vocabulary."""

    def __init__(self, label):
        self.label = label
        super().__init__(f"label {label!r} not in vocabulary")


def one_hot_encode(values, vocabulary) -> np.ndarray:
    """One column per vocabulary entry; each row has exactly one 1.

    Unseen labels raise UnseenLabelError; there is no silent 'other' bucket.
    """
    vocabulary = list(vocabulary)
    index = {label: i for i, label in enumerate(vocabulary)}
    out = np.zeros((len(values), len(vocabulary)), dtype=float)
    for r, value in enumerate(values):
        try:
            out[r, index[value]] = 1.0
        except KeyError:
            raise UnseenLabelError(value) from None
    return out


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column mean and sample sd, fit on training rows only."""

    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.sd.shape:
            raise ValueError("mean and sd must have the same length")
        if (self.sd < 0).any():
            raise ValueError("sd entries must be >= 0")


def fit_standardizer(train_columns: np.ndarray) -> StandardizationParams:
    """Column means and sample standard deviations of the training block."""
    train_columns = np.asarray(train_columns, dtype=float)
    if train_columns.ndim != 2 or len(train_columns) < 2:
        raise ValueError("fit_standardizer needs a 2-D block with >= 2 rows")
    return StandardizationParams(
        mean=train_columns.mean(axis=0),
        sd=train_columns.std(axis=0, ddof=1),
    )


def apply_standardizer(params: StandardizationParams, data: np.ndarray) -> np.ndarray:
    """z = (x - mean) / sd; zero-variance columns map to all zeros."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(params.mean):
        raise ValueError(
            f"column count {data.shape[1] if data.ndim == 2 else '?'} "
            f"does not match params length {len(params.mean)}")
    safe = np.where(params.sd == 0.0, 1.0, params.sd)
    z = (data - params.mean) / safe
    z[:, params.sd == 0.0] = 0.0
    return z


class Strategy(enum.IntEnum):
    RAW_NUMERIC = 1
    STANDARDIZED_NUMERIC = 2
    STANDARDIZED_PLUS_CATEGORICAL = 3


@dataclass(frozen=True)
class StrategyConfig:
    """Which input strategy to assemble and which categorical groups to include.

    year/day ordinals are excluded by default: the test period's year is
    unseen in training, so including them invites extrapolation artifacts.
    """

    strategy: Strategy = Strategy.RAW_NUMERIC
    site_onehot: bool = True
    month_onehot: bool = True
    weekday_onehot: bool = True
    season_onehot: bool = True
    year_ordinal: bool = False
    day_ordinal: bool = False

    def __post_init__(self):
        if self.strategy == Strategy.STANDARDIZED_PLUS_CATEGORICAL and not self.site_onehot:
            raise ValueError("strategy 3 requires the site one-hot group")


@dataclass(frozen=True)
class DesignMatrix:
    """What every model consumes: named columns, values and targets."""

    column_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    kinds: tuple[str, ...]  # "numeric" | "one_hot"
    groups: dict[str, list[int]] = field(default_factory=dict)  # one-hot column blocks

    def __post_init__(self):
        if self.X.shape != (len(self.y), len(self.column_names)):
            raise ValueError("X shape inconsistent with names/targets")
        if not np.isfinite(self.X).all():
            raise ValueError("design matrix contains non-finite entries")

    @property
    def n_rows(self) -> int:
        return len(self.y)

    @property
    def n_cols(self) -> int:
        return len(self.column_names)


def numeric_block(table: StackedTable, cfg: StrategyConfig) -> tuple[list[str], np.ndarray]:
    """The numeric columns a strategy uses, in X1..Xp order (plus optional ordinals)."""
    names = list(table.feature_names)
    cols = [table.X]
    if cfg.strategy == Strategy.STANDARDIZED_PLUS_CATEGORICAL:
        if cfg.year_ordinal:
            names.append("year")
            cols.append(np.array([[d.year] for d in table.dates], dtype=float))
        if cfg.day_ordinal:
            names.append("day")
            cols.append(np.array([[d.day] for d in table.dates], dtype=float))
    return names, np.column_stack(cols) if len(cols) > 1 else cols[0].copy()


def assemble_design(table: StackedTable, cfg: StrategyConfig,
                    params: StandardizationParams | None = None,
                    site_vocabulary: tuple[str, ...] | None = None) -> DesignMatrix:
    """Build the design matrix for one strategy.

    Strategies 2 and 3 require standardization params fitted on the
    training split (fit_standardizer over this function's numeric_block).
    Column order is deterministic: numerics first, then one-hot groups in
    site, month, weekday, season order, vocabulary order within each group.

    For test-set assembly pass the training panel's site vocabulary so the
    one-hot columns line up; an unseen site raises UnseenLabelError.
    """
    names, numeric = numeric_block(table, cfg)
    kinds = ["numeric"] * len(names)
    groups: dict[str, list[int]] = {}

    if cfg.strategy in (Strategy.STANDARDIZED_NUMERIC, Strategy.STANDARDIZED_PLUS_CATEGORICAL):
        if params is None:
            raise ValueError(f"strategy {int(cfg.strategy)} requires standardization params")
        numeric = apply_standardizer(params, numeric)
    blocks = [numeric]

    if cfg.strategy == Strategy.STANDARDIZED_PLUS_CATEGORICAL:
        temporal = [decompose_date(d) for d in table.dates]
        onehots: list[tuple[str, list, tuple]] = []
        if cfg.site_onehot:
            vocab = site_vocabulary if site_vocabulary is not None else _site_vocab(table)
            onehots.append(("site", list(table.site_ids), vocab))
        if cfg.month_onehot:
            onehots.append(("month", [t.month for t in temporal], MONTH_VOCAB))
        if cfg.weekday_onehot:
            onehots.append(("weekday", [t.weekday for t in temporal], WEEKDAY_VOCAB))
        if cfg.season_onehot:
            onehots.append(("season", [t.season for t in temporal], SEASON_VOCAB))
        for group, values, vocab in onehots:
            start = sum(b.shape[1] for b in blocks)
            block = one_hot_encode(values, vocab)
            blocks.append(block)
            labels = [v.value if isinstance(v, Season) else v for v in vocab]
            names.extend(f"{group}={label}" for label in labels)
            kinds.extend(["one_hot"] * len(vocab))
            groups[group] = list(range(start, start + len(vocab)))

    X = np.column_stack(blocks) if len(blocks) > 1 else blocks[0]
    return DesignMatrix(
        column_names=tuple(names), X=X, y=table.y.copy(),
        kinds=tuple(kinds), groups=groups)


def _site_vocab(table: StackedTable) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for s in table.site_ids:
        seen.setdefault(s)
    return tuple(seen)
