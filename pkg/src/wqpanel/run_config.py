"""Single-file JSON run configuration for the CLI.

The seed is mandatory (there is no wall-clock default: every run must be
reproducible). Relative paths are resolved against the config file's
directory. The output directory alone can be overridden by the
WQPANEL_OUTPUT_DIR environment variable; everything else changes via
flags or the file itself.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .families import FAMILIES
from .features import Strategy, StrategyConfig
from .tuner import FoldScheme

OUTPUT_DIR_ENV = "WQPANEL_OUTPUT_DIR"

SHAP_KINDS = ("marginalize", "retrain")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    seed: int
    train_csv: Path
    test_csv: Path
    schema_path: Path
    output_dir: Path
    sites_csv: Path | None = None
    strategy: int = 2
    categoricals: dict = field(default_factory=dict)
    cv_k: int = 5
    cv_scheme: str = "shuffled"
    families: tuple[str, ...] = ("elastic_net", "random_forest", "gbdt",
                                 "gbdt_goss", "mlp")
    grids: dict = field(default_factory=dict)
    shap_kind: str = "marginalize"
    shap_background: int = 256
    shap_rows: list[int] | dict | None = None
    shap_cap: int = 15
    n_jobs: int = 1

    def strategy_config(self, strategy: int | None = None) -> StrategyConfig:
        number = self.strategy if strategy is None else strategy
        cat = {"site": True, "month": True, "weekday": True, "season": True,
               "year_ordinal": False, "day_ordinal": False}
        cat.update(self.categoricals)
        return StrategyConfig(
            strategy=Strategy(number),
            site_onehot=cat["site"], month_onehot=cat["month"],
            weekday_onehot=cat["weekday"], season_onehot=cat["season"],
            year_ordinal=cat["year_ordinal"], day_ordinal=cat["day_ordinal"])

    def fold_scheme(self) -> FoldScheme:
        return FoldScheme(self.cv_scheme)

    def require_data_paths(self) -> None:
        for label, path in (("train_csv", self.train_csv), ("test_csv", self.test_csv),
                            ("schema", self.schema_path)):
            if not path.exists():
                raise ConfigError(f"{label} path does not exist: {path}")
        if self.sites_csv is not None and not self.sites_csv.exists():
            raise ConfigError(f"sites_csv path does not exist: {self.sites_csv}")


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None

    if "seed" not in raw:
        raise ConfigError("config must set an explicit integer seed")
    seed = raw["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

    data = raw.get("data", {})
    for key in ("train_csv", "test_csv", "schema"):
        if key not in data:
            raise ConfigError(f"config data section must set {key!r}")
    base = path.parent

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    out_dir = os.environ.get(OUTPUT_DIR_ENV) or raw.get("output_dir", "out")

    strategy = raw.get("strategy", 2)
    if strategy not in (1, 2, 3):
        raise ConfigError(f"strategy must be 1, 2 or 3, got {strategy!r}")

    families = tuple(raw.get("families", ("elastic_net", "random_forest", "gbdt",
                                          "gbdt_goss", "mlp")))
    unknown = [f for f in families if f not in FAMILIES or f == "benchmark"]
    if unknown:
        raise ConfigError(f"unknown tunable families in config: {unknown}")

    cv = raw.get("cv", {})
    cv_k = cv.get("k", 5)
    if not isinstance(cv_k, int) or cv_k < 2:
        raise ConfigError(f"cv.k must be an integer >= 2, got {cv_k!r}")
    cv_scheme = cv.get("scheme", "shuffled")
    if cv_scheme not in (s.value for s in FoldScheme):
        raise ConfigError(f"cv.scheme must be one of "
                          f"{[s.value for s in FoldScheme]}, got {cv_scheme!r}")

    shap = raw.get("shap", {})
    shap_kind = shap.get("kind", "marginalize")
    if shap_kind not in SHAP_KINDS:
        raise ConfigError(f"shap.kind must be one of {SHAP_KINDS}, got {shap_kind!r}")

    return RunConfig(
        seed=seed,
        train_csv=resolve(data["train_csv"]),
        test_csv=resolve(data["test_csv"]),
        schema_path=resolve(data["schema"]),
        sites_csv=resolve(data["sites_csv"]) if data.get("sites_csv") else None,
        output_dir=resolve(out_dir),
        strategy=strategy,
        categoricals=dict(raw.get("categoricals", {})),
        cv_k=cv_k,
        cv_scheme=cv_scheme,
        families=families,
        grids={k: dict(v) for k, v in raw.get("grids", {}).items()},
        shap_kind=shap_kind,
        shap_background=int(shap.get("background_size", 256)),
        shap_rows=shap.get("rows"),
        shap_cap=int(shap.get("cap", 15)),
        n_jobs=int(raw.get("n_jobs", 1)),
    )
