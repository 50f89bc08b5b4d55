"""Report assembly and emission: CSV, JSON mirror, and per-check plot
tables (TSV) with rendered figures."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .checks import CheckResult, CheckRow
from .errors import IoError

CSV_HEADER = ["check", "scenario", "metric", "value", "tolerance", "pass", "samples", "seed", "wall_ms"]
VERSION = "0.1.0"


@dataclass
class Report:
    rows: list  # of CheckRow
    metadata: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)  # name -> (header, rows)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)


def assemble(results: list[CheckResult], manifold, extra_meta: dict = None) -> Report:
    rows = sorted((r.row for r in results), key=lambda r: (r.check, r.scenario))
    plots = {}
    for r in results:
        plots.update(r.plots)
    meta = {"version": VERSION, "manifold": {"n": manifold.n, "K": manifold.K}}
    if extra_meta:
        meta.update(extra_meta)
    return Report(rows, meta, plots)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _row_cells(r: CheckRow) -> list[str]:
    return [
        r.check, r.scenario, r.metric, _fmt(r.value), _fmt(r.tolerance),
        "true" if r.passed else "false", str(r.samples), str(r.seed), str(r.wall_ms),
    ]


def emit_report(report: Report, fmt: str, out_dir) -> list:
    """Write the report in the requested format; returns the created paths."""
    if fmt not in ("csv", "json", "plot-tables"):
        raise ValueError(f"unknown report format {fmt!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            return [_write_csv(report, out / "report.csv")]
        if fmt == "json":
            return [_write_json(report, out / "report.json")]
        paths = [_write_csv(report, out / "report.csv")]
        for name, (header, rows) in sorted(report.plots.items()):
            p = out / f"{name}.tsv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, delimiter="\t")
                w.writerow(header)
                for row in rows:
                    w.writerow([_fmt(c) if isinstance(c, float) else c for c in row])
            paths.append(p)
        from .plots import render_plot_tables

        paths.extend(render_plot_tables(report.plots, out))
        return paths
    except OSError as e:
        raise IoError(f"cannot write report to {out}: {e}") from e


def _write_csv(report: Report, path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in report.rows:
            w.writerow(_row_cells(r))
    return path


def _write_json(report: Report, path: Path) -> Path:
    payload = {
        "metadata": report.metadata,
        "rows": [
            {
                "check": r.check, "scenario": r.scenario, "metric": r.metric,
                "value": r.value, "tolerance": r.tolerance, "pass": r.passed,
                "samples": r.samples, "seed": r.seed, "wall_ms": r.wall_ms,
            }
            for r in report.rows
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_report_json(path) -> Report:
    """Inverse of the JSON writer (round-trip property)."""
    with open(path) as fh:
        payload = json.load(fh)
    rows = [
        CheckRow(
            check=d["check"], scenario=d["scenario"], metric=d["metric"],
            value=d["value"], tolerance=d["tolerance"], passed=d["pass"],
            samples=d["samples"], seed=d["seed"], wall_ms=d["wall_ms"],
        )
        for d in payload["rows"]
    ]
    return Report(rows, payload["metadata"], {})
