"""Report tables: five-metric results, tuning timings, x1000 display format.

Stored metric values stay in original units; every renderer here applies
the x1000 scaling with 2-decimal display. Best-per-column flags cover the
rows actually produced by this run (the published external RMSE is echoed
for comparison but never flagged).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from .families import FAMILIES
from .metrics import METRIC_NAMES, MetricReport
from .panel import CorrelationMatrix, SummaryStats

# published RMSE of the spatio-temporal reference model, echoed as a
# comparison constant in every results table (original units)
EXTERNAL_ROW_LABEL = "SADL-II (published)"
EXTERNAL_REFERENCE_RMSE = 11.50 / 1000.0

DISPLAY_SCALE = 1000.0


def display(value: float | None) -> str:
    return "N/A" if value is None else f"{value * DISPLAY_SCALE:.2f}"


@dataclass(frozen=True)
class ResultsTable:
    """One row per model: the five metrics on the held-out test set."""

    rows: tuple[tuple[str, dict[str, float | None]], ...]

    def best_labels(self) -> dict[str, str]:
        """Label achieving the minimum per metric, external reference excluded."""
        best: dict[str, str] = {}
        for metric in METRIC_NAMES:
            candidates = [(vals[metric], label) for label, vals in self.rows
                          if label != EXTERNAL_ROW_LABEL and vals.get(metric) is not None]
            if candidates:
                best[metric] = min(candidates)[1]
        return best

    def to_dict(self) -> dict:
        return {"rows": [[label, dict(vals)] for label, vals in self.rows]}

    @classmethod
    def from_dict(cls, raw: dict) -> "ResultsTable":
        return cls(rows=tuple((label, dict(vals)) for label, vals in raw["rows"]))


def _display_name(family_name: str) -> str:
    family = FAMILIES.get(family_name)
    return family.display_name if family else family_name


def build_results_table(reports: dict[str, MetricReport],
                        include_external: bool = True) -> ResultsTable:
    """Rows: external reference, Benchmarking, then families by display name."""
    rows: list[tuple[str, dict[str, float | None]]] = []
    if include_external:
        external: dict[str, float | None] = {m: None for m in METRIC_NAMES}
        external["rmse"] = EXTERNAL_REFERENCE_RMSE
        rows.append((EXTERNAL_ROW_LABEL, external))
    if "benchmark" in reports:
        rows.append((_display_name("benchmark"), dict(reports["benchmark"].as_dict())))
    others = sorted((name for name in reports if name != "benchmark"),
                    key=_display_name)
    for name in others:
        rows.append((_display_name(name), dict(reports[name].as_dict())))
    return ResultsTable(rows=tuple(rows))


def render_results_csv(table: ResultsTable) -> str:
    """Tables 4-6 shape plus a best_model footer row flagging the winners."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["model", *METRIC_NAMES])
    for label, vals in table.rows:
        writer.writerow([label, *(display(vals.get(m)) for m in METRIC_NAMES)])
    best = table.best_labels()
    writer.writerow(["best_model", *(best.get(m, "") for m in METRIC_NAMES)])
    return out.getvalue()


def render_results_markdown(table: ResultsTable) -> str:
    best = table.best_labels()
    lines = ["| Models | RMSE | MAPE | WMAPE | WUPRED | WOPRED |",
             "|---|---|---|---|---|---|"]
    for label, vals in table.rows:
        cells = []
        for metric in METRIC_NAMES:
            text = display(vals.get(metric))
            if best.get(metric) == label:
                text = f"**{text}**"
            cells.append(text)
        lines.append("| " + " | ".join([label, *cells]) + " |")
    lines.append("")
    lines.append("*All values are original values x 1000; bold marks the best "
                 "per column.*")
    return "\n".join(lines) + "\n"


def render_timing_csv(timings: list[dict]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["model", "total_fits", "tuning_time", "average_tuning",
                     "fitting_time_best_model"])
    for t in timings:
        writer.writerow([_display_name(t["family"]), t["total_fits"],
                         f"{t['tuning_time']:.2f}", f"{t['average_tuning']:.2f}",
                         f"{t['best_fit_time']:.2f}"])
    return out.getvalue()


def render_timing_markdown(timings: list[dict]) -> str:
    lines = ["| Models | Total Fits | Tuning Time | Average Tuning | "
             "Fitting Time (Best Model) |",
             "|---|---|---|---|---|"]
    for t in timings:
        lines.append(f"| {_display_name(t['family'])} | {t['total_fits']} "
                     f"| {t['tuning_time']:.2f} | {t['average_tuning']:.2f} "
                     f"| {t['best_fit_time']:.2f} |")
    lines.append("")
    lines.append("*Times in seconds; hardware-dependent, reported but never "
                 "compared against published values.*")
    return "\n".join(lines) + "\n"


def render_summary_csv(stats: SummaryStats) -> str:
    """Table-3 shape: one row per statistic, 2-decimal display."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["statistic", *stats.columns])
    for stat in SummaryStats.STAT_ROWS:
        writer.writerow([stat, *(f"{v:.2f}" for v in stats.row(stat))])
    return out.getvalue()


def render_summary_json(stats: SummaryStats) -> str:
    payload = {stat: {col: float(v) for col, v in zip(stats.columns, stats.row(stat))}
               for stat in SummaryStats.STAT_ROWS}
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def render_correlation_csv(corr: CorrelationMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["", *corr.columns])
    for label, row in zip(corr.columns, corr.values):
        writer.writerow([label, *(repr(float(v)) for v in row)])
    return out.getvalue()


def render_importance_csv(importance: dict[str, float]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["feature", "importance"])
    for name, value in sorted(importance.items(), key=lambda kv: -kv[1]):
        writer.writerow([name, repr(value)])
    return out.getvalue()


def persist_results_table(out_dir: str | Path, strategy: int,
                          table: ResultsTable) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"results_strategy{strategy}.csv"
    csv_path.write_text(render_results_csv(table), encoding="utf-8")
    json_path = out_dir / f"results_strategy{strategy}.json"
    json_path.write_text(
        json.dumps({"strategy": strategy, **table.to_dict()}, indent=1, sort_keys=True)
        + "\n", encoding="utf-8")
    return [csv_path, json_path]


def persist_tuning_artifacts(out_dir: str | Path, strategy: int, tuning: dict,
                             importances: dict, pipeline_state, seed: int) -> list[Path]:
    """Write tuning results, timing, importances and model bundles.

    Timing goes to its own file: it is the one output wall-clock makes
    non-reproducible; everything else is byte-identical under a fixed
    seed.
    """
    from .serialize import save_model  # local import keeps module deps one-way

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def put(path: Path, text: str) -> None:
        path.write_text(text, encoding="utf-8")
        written.append(path)

    for name, result in tuning.items():
        put(out_dir / f"tuning_strategy{strategy}_{name}.json",
            json.dumps(result.to_dict(), indent=1, sort_keys=True) + "\n")
    put(out_dir / f"timing_strategy{strategy}.json",
        json.dumps([tuning[name].timing_dict() for name in sorted(tuning)],
                   indent=1) + "\n")

    for name, importance in importances.items():
        if importance is not None:
            put(out_dir / f"importance_strategy{strategy}_{name}.csv",
                render_importance_csv(importance))

    models_dir = out_dir / "models"
    for name, result in tuning.items():
        path = models_dir / f"model_strategy{strategy}_{name}.json"
        save_model(path, name, result.best_model, result.best_config, seed,
                   pipeline_state)
        written.append(path)
    return written


def persist_pipeline_result(result, out_dir: str | Path, seed: int) -> list[Path]:
    """Write every artifact of one full-strategy run under out_dir."""
    written = persist_results_table(out_dir, result.strategy, result.results_table)
    written += persist_tuning_artifacts(out_dir, result.strategy, result.tuning,
                                        result.importances, result.pipeline_state, seed)
    return written
