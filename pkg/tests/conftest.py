import csv
import datetime as dt
import json
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from wqpanel.panel import PanelDataset

hypothesis.settings.register_profile(
    "suite", max_examples=40, deadline=None,
    suppress_health_check=[hypothesis.HealthCheck.too_slow])
hypothesis.settings.load_profile("suite")


def synthetic_panel(n_dates: int, n_sites: int, n_features: int,
                    seed: int = 0, start=dt.date(2016, 1, 28)) -> PanelDataset:
    """Random panel with features in [0, 1] and targets around 0.66."""
    rng = np.random.default_rng(seed)
    dates = tuple(start + dt.timedelta(days=i) for i in range(n_dates))
    sites = tuple(f"site{j:02d}" for j in range(n_sites))
    names = tuple(f"X{i + 1}" for i in range(n_features))
    features = rng.uniform(0.0, 1.0, size=(n_dates, n_sites, n_features))
    targets = np.clip(0.66 + 0.08 * rng.standard_normal((n_dates, n_sites)), 0.3, 0.99)
    return PanelDataset(dates=dates, site_ids=sites, feature_names=names,
                        features=features, targets=targets)


def linked_panel(n_dates: int, n_sites: int, n_features: int, seed: int = 0,
                 noise: float = 0.0) -> PanelDataset:
    """Panel whose target is a fixed linear function of the features."""
    rng = np.random.default_rng(seed)
    base = synthetic_panel(n_dates, n_sites, n_features, seed=seed)
    coef = np.linspace(0.05, 0.01, n_features)
    targets = 0.5 + base.features @ coef
    if noise:
        targets = targets + noise * rng.standard_normal(targets.shape)
    return PanelDataset(dates=base.dates, site_ids=base.site_ids,
                        feature_names=base.feature_names,
                        features=base.features, targets=targets)


def write_panel_csv(path: Path, panel: PanelDataset,
                    date_col="datetime", site_col="site_no",
                    target_col="median_ph") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([date_col, site_col, *(f"raw_{n}" for n in panel.feature_names),
                         target_col])
        for i, date in enumerate(panel.dates):
            for j, site in enumerate(panel.site_ids):
                writer.writerow([date.isoformat(), site,
                                 *(repr(float(v)) for v in panel.features[i, j]),
                                 repr(float(panel.targets[i, j]))])


def write_schema(path: Path, feature_names,
                 date_col="datetime", site_col="site_no",
                 target_col="median_ph") -> None:
    schema = {
        "date_column": date_col,
        "site_column": site_col,
        "target_column": target_col,
        "feature_columns": {name: f"raw_{name}" for name in feature_names},
    }
    path.write_text(json.dumps(schema, indent=1), encoding="utf-8")


@pytest.fixture
def tiny_panel() -> PanelDataset:
    return synthetic_panel(6, 3, 4, seed=7)


@pytest.fixture
def panel_files(tmp_path):
    """Train/test CSVs, schema, sites file and a run config on disk."""

    def build(n_train=8, n_test=5, n_sites=3, n_features=4, seed=3,
              linked=True, **config_overrides):
        maker = linked_panel if linked else synthetic_panel
        train = maker(n_train, n_sites, n_features, seed=seed)
        test = maker(n_test, n_sites, n_features, seed=seed + 1)
        # keep test dates after train dates
        shift = (train.dates[-1] - test.dates[0]).days + 1
        test = PanelDataset(
            dates=tuple(d + dt.timedelta(days=shift) for d in test.dates),
            site_ids=train.site_ids, feature_names=train.feature_names,
            features=test.features, targets=test.targets)

        train_csv = tmp_path / "train.csv"
        test_csv = tmp_path / "test.csv"
        schema = tmp_path / "schema.json"
        sites = tmp_path / "sites.csv"
        write_panel_csv(train_csv, train)
        write_panel_csv(test_csv, test)
        write_schema(schema, train.feature_names)
        with open(sites, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["site_id", "location_group"])
            for s in train.site_ids:
                writer.writerow([s, "group1"])

        config = {
            "seed": 20240101,
            "data": {"train_csv": "train.csv", "test_csv": "test.csv",
                     "schema": "schema.json", "sites_csv": "sites.csv"},
            "output_dir": "out",
            "strategy": 2,
            "cv": {"k": 3, "scheme": "shuffled"},
            "families": ["elastic_net"],
            "grids": {"elastic_net": {"lam": [0.0001, 0.01], "alpha": [0.0, 1.0]}},
            "shap": {"kind": "marginalize", "background_size": 16},
            "n_jobs": 1,
        }
        config.update(config_overrides)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(config, indent=1), encoding="utf-8")
        return {"dir": tmp_path, "config": config_path, "train": train,
                "test": test, "train_csv": train_csv, "test_csv": test_csv,
                "schema": schema, "sites": sites, "out": tmp_path / "out"}

    return build
