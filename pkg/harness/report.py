"""
harness/report.py

Report rows, their CSV / manifest emission and the aggregated markdown report.

Row constructors:
  check_close     |value - target| <= tol (relative when rel=True)
  check_at_most   value <= bound
  check_at_least  value >= bound
  check_between   lo <= value <= hi
  report_only     recorded, never asserted

All data is kept as plain dataclasses / dicts so it serialises directly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

CSV_HEADER = ("experiment", "params", "metric", "value", "target", "tol", "pass")


def _num(x: Optional[float]) -> str:
    if x is None:
        return ""
    return format(float(x), ".12g")


# ---------------------------------------------------------------------------
# Row-level record
# ---------------------------------------------------------------------------

@dataclass
class ReportRow:
    experiment: str
    params: str
    metric: str
    value: float
    target: str
    tol: str
    passed: bool
    provenance: str
    asserted: bool = True
    diagnostic: str = ""

    def csv_fields(self) -> list[str]:
        flag = ("pass" if self.passed else "FAIL") if self.asserted else "info"
        return [self.experiment, self.params, self.metric, _num(self.value), self.target, self.tol, flag]

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ReportRow":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


class RowBuilder:
    """Binds experiment id and parameter string for the row constructors."""

    def __init__(self, experiment: str, params: str) -> None:
        self.experiment = experiment
        self.params = params
        self.rows: list[ReportRow] = []

    def _add(self, metric: str, value: float, target: str, tol: str, passed: bool,
             provenance: str, asserted: bool = True, diagnostic: str = "") -> ReportRow:
        row = ReportRow(self.experiment, self.params, metric, float(value), target, tol,
                        bool(passed) and math.isfinite(float(value)) if asserted else True,
                        provenance, asserted, diagnostic)
        self.rows.append(row)
        return row

    def check_close(self, metric: str, value: float, target: float, tol: float, provenance: str,
                    rel: bool = False) -> ReportRow:
        scale = abs(target) if rel else 1.0
        passed = abs(value - target) <= tol * scale
        return self._add(metric, value, _num(target), f"{_num(tol)} {'rel' if rel else 'abs'}", passed, provenance)

    def check_at_most(self, metric: str, value: float, bound: float, provenance: str) -> ReportRow:
        return self._add(metric, value, f"<= {_num(bound)}", "", value <= bound, provenance)

    def check_at_least(self, metric: str, value: float, bound: float, provenance: str) -> ReportRow:
        return self._add(metric, value, f">= {_num(bound)}", "", value >= bound, provenance)

    def check_between(self, metric: str, value: float, lo: float, hi: float, provenance: str) -> ReportRow:
        return self._add(metric, value, f"[{_num(lo)}, {_num(hi)}]", "", lo <= value <= hi, provenance)

    def report_only(self, metric: str, value: float, provenance: str, target: str = "") -> ReportRow:
        return self._add(metric, value, target, "", True, provenance, asserted=False)

    def failure(self, metric: str, diagnostic: str, provenance: str) -> ReportRow:
        """A row for a step that raised instead of producing a value."""
        return self._add(metric, float("nan"), "", "", False, provenance, diagnostic=diagnostic)


def all_passed(rows: Sequence[ReportRow]) -> bool:
    return all(r.passed for r in rows if r.asserted)


# ---------------------------------------------------------------------------
# Per-experiment files
# ---------------------------------------------------------------------------

def render_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow(r.csv_fields())
    return buf.getvalue()


def write_csv(rows: Sequence[ReportRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(rows), encoding="utf-8")
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_manifest(rows: Sequence[ReportRow], path: str | Path, extra: Optional[dict] = None) -> Path:
    """metric -> provenance map, plus diagnostics of failed rows."""
    manifest: dict[str, Any] = {
        "metrics": {r.metric: {"provenance": r.provenance, "asserted": r.asserted} for r in rows},
        "failures": {r.metric: r.diagnostic for r in rows if r.asserted and not r.passed},
    }
    if extra:
        manifest.update(extra)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Aggregate report
# ---------------------------------------------------------------------------

def aggregate(results_root: str | Path) -> dict:
    """Collect every results.csv below the root into a report dict."""
    root = Path(results_root)
    runs = []
    for csv_path in sorted(root.glob("*/results.csv")):
        rows = read_csv(csv_path)
        asserted = [r for r in rows if r["pass"] != "info"]
        runs.append({
            "name": csv_path.parent.name,
            "experiment": rows[0]["experiment"] if rows else "",
            "n_rows": len(rows),
            "n_asserted": len(asserted),
            "n_passed": sum(1 for r in asserted if r["pass"] == "pass"),
            "rows": rows,
        })
    by_experiment: dict[str, list[dict]] = defaultdict(list)
    for run in runs:
        by_experiment[run["experiment"]].append(run)
    n_asserted = sum(r["n_asserted"] for r in runs)
    n_passed = sum(r["n_passed"] for r in runs)
    return {
        "root": str(root),
        "n_runs": len(runs),
        "n_asserted": n_asserted,
        "n_passed": n_passed,
        "pass_rate": round(n_passed / max(n_asserted, 1), 4),
        "per_experiment": {
            exp: {"n_runs": len(group),
                  "n_asserted": sum(r["n_asserted"] for r in group),
                  "n_passed": sum(r["n_passed"] for r in group)}
            for exp, group in sorted(by_experiment.items())
        },
        "runs": runs,
    }


def save_report(results_root: str | Path) -> dict:
    """Write report.json and report.md to the results root."""
    root = Path(results_root)
    report = aggregate(root)
    with open(root / "report.json", "w") as f:
        json.dump(report, f, indent=2)
    with open(root / "report.md", "w") as f:
        f.write(_render_markdown(report))
    return report


def _render_markdown(report: dict) -> str:
    lines = [
        "# Experiment Report",
        "",
        f"**Runs**: {report['n_runs']}  "
        f"| **Asserted rows passed**: {report['n_passed']}/{report['n_asserted']} "
        f"({report['pass_rate']*100:.1f}%)",
        "",
        "## Results by Experiment",
        "",
        "| Experiment | Runs | Passed | Asserted |",
        "|------------|------|--------|----------|",
    ]
    for exp, stats in report["per_experiment"].items():
        lines.append(f"| {exp} | {stats['n_runs']} | {stats['n_passed']} | {stats['n_asserted']} |")

    for run in report["runs"]:
        lines += [
            "",
            f"## {run['name']} ({run['experiment']})",
            "",
            "| Metric | Params | Value | Target | Tol | Result |",
            "|--------|--------|-------|--------|-----|--------|",
        ]
        for r in run["rows"]:
            mark = {"pass": "✅", "FAIL": "❌"}.get(r["pass"], "·")
            lines.append(f"| {r['metric']} | {r['params']} | {r['value']} | {r['target']} | {r['tol']} | {mark} |")
    return "\n".join(lines) + "\n"
