"""Report files: CSV tables, JSON summaries, SVG charts, run manifests.

Everything written here is byte-deterministic for a fixed configuration and
seed: floats are formatted with repr-level precision, JSON keys are sorted,
and charts are rendered with a pinned hash salt and no timestamp metadata.
Timing information belongs in the solver log, never in reports.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Mapping

from . import __version__
from .analysis import ComparisonReport, KpiReport, VssReport

KPI_ROWS: tuple[tuple[str, str], ...] = (
    ("total_contracted_driver_hours", "Total contracted hours of drivers (hrs)"),
    ("avg_tractor_rental_hours", "Average rental hours of tractors (hrs)"),
    ("avg_hauler_rental_hours", "Average rental hours of haulers (hrs)"),
    ("avg_outsourcing_rate", "Average outsourcing rate of commodities"),
    ("total_expected_cost", "Total expected transportation cost ($)"),
)


def fmt(value: float) -> str:
    return format(float(value), ".10g")


def kpi_table_csv(columns: Mapping[str, KpiReport | None]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["KPI", *columns.keys()])
    for attr, label in KPI_ROWS:
        row = [label]
        for report in columns.values():
            row.append("" if report is None else fmt(getattr(report, attr)))
        writer.writerow(row)
    return out.getvalue()


def design_csv(x: Mapping[int, int]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["service_id", "count"])
    for sid in sorted(x):
        writer.writerow([sid, x[sid]])
    return out.getvalue()


def load_design_rows(text: str) -> dict[int, int]:
    x: dict[int, int] = {}
    for i, row in enumerate(csv.reader(io.StringIO(text))):
        if not row or (i == 0 and row[0].strip() == "service_id"):
            continue
        x[int(row[0])] = int(row[1])
    return x


def recourse_csv(rows: Iterable[tuple[int, float, float, float, float]]) -> str:
    """Rows: (scenario_id, probability, recourse_cost, outsourced_volume, total_volume)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["scenario_id", "probability", "recourse_cost", "outsourced_volume", "total_volume"]
    )
    for sid, p, cost, outs, tot in rows:
        writer.writerow([sid, fmt(p), fmt(cost), fmt(outs), fmt(tot)])
    return out.getvalue()


def vss_csv(report: VssReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric", "value"])
    writer.writerow(["stochastic_cost", fmt(report.stochastic_cost)])
    writer.writerow(["deterministic_design_cost", fmt(report.deterministic_design_cost)])
    writer.writerow(["vss", fmt(report.vss)])
    writer.writerow(["conclusive", str(report.conclusive).lower()])
    return out.getvalue()


def comparison_csv(report: ComparisonReport) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["run", "status", "objective", *(label for _, label in KPI_ROWS)])
    for entry in report.entries:
        row = [entry.key, entry.status]
        row.append("" if entry.objective is None else fmt(entry.objective))
        for attr, _ in KPI_ROWS:
            row.append("" if entry.kpis is None else fmt(getattr(entry.kpis, attr)))
        writer.writerow(row)
    return out.getvalue()


def write_manifest(outdir: Path, command: str, config_text: str, seed: int) -> Path:
    manifest = {
        "command": command,
        "config_sha256": hashlib.sha256(config_text.encode()).hexdigest(),
        "seed": seed,
        "version": __version__,
    }
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def hours_cost_chart(
    path: Path,
    labels: list[str],
    hours_series: Mapping[str, list[float]],
    costs: list[float],
) -> None:
    """Two-panel bar chart: contracted/rental hours on the left, total
    expected cost on the right."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "relaynet"
    fig, (ax_hours, ax_cost) = plt.subplots(1, 2, figsize=(10, 4))
    n = len(labels)
    width = 0.8 / max(1, len(hours_series))
    for i, (name, values) in enumerate(hours_series.items()):
        xs = [j + i * width for j in range(n)]
        ax_hours.bar(xs, values, width=width, label=name)
    ax_hours.set_xticks([j + 0.4 - width / 2 for j in range(n)])
    ax_hours.set_xticklabels(labels, rotation=20, ha="right")
    ax_hours.set_ylabel("hours")
    ax_hours.legend()
    ax_cost.bar(range(n), costs, width=0.6, color="#555f7a")
    ax_cost.set_xticks(range(n))
    ax_cost.set_xticklabels(labels, rotation=20, ha="right")
    ax_cost.set_ylabel("total expected cost ($)")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def comparison_chart(path: Path, report: ComparisonReport) -> None:
    labels = [e.key for e in report.entries]
    hours = {
        "driver": [
            0.0 if e.kpis is None else e.kpis.total_contracted_driver_hours
            for e in report.entries
        ],
        "tractor": [
            0.0 if e.kpis is None else e.kpis.avg_tractor_rental_hours
            for e in report.entries
        ],
        "hauler": [
            0.0 if e.kpis is None else e.kpis.avg_hauler_rental_hours
            for e in report.entries
        ],
    }
    costs = [0.0 if e.objective is None else e.objective for e in report.entries]
    hours_cost_chart(path, labels, hours, costs)


def vss_chart(path: Path, report: VssReport) -> None:
    labels = ["deterministic design", "stochastic design"]
    hours = {
        "driver": [
            report.deterministic_kpis.total_contracted_driver_hours,
            report.stochastic_kpis.total_contracted_driver_hours,
        ],
        "tractor": [
            report.deterministic_kpis.avg_tractor_rental_hours,
            report.stochastic_kpis.avg_tractor_rental_hours,
        ],
        "hauler": [
            report.deterministic_kpis.avg_hauler_rental_hours,
            report.stochastic_kpis.avg_hauler_rental_hours,
        ],
    }
    costs = [report.deterministic_design_cost, report.stochastic_cost]
    hours_cost_chart(path, labels, hours, costs)
