"""CSV/JSON emission and console tables for lab results."""

import csv
import json
import math
from typing import IO

from rich.table import Table

from lab.config import LabConfig
from lab.convergence import ConvergenceResult
from lab.deriv_check import DerivCheckResult
from lab.sweep import SweepRecord, SweepResult

CSV_COLUMNS = [
    "t",
    "sigma",
    "sigma_prime",
    "sigma_second",
    "fd_first",
    "fd_second",
    "lower_bound",
    "upper_bound",
    "h",
    "sigma2_gap",
]
CONVERGENCE_COLUMNS = ["h", "sigma", "error", "order", "triangles"]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}" if math.isfinite(value) else str(value)
    return str(value)


def write_sweep_csv(records: list[SweepRecord], stream: IO[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        row = rec.to_dict()
        writer.writerow([_cell(row[k]) for k in CSV_COLUMNS])


def write_convergence_csv(result: ConvergenceResult, stream: IO[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CONVERGENCE_COLUMNS)
    for row in result.rows:
        d = row.to_dict()
        writer.writerow([_cell(d[k]) for k in CONVERGENCE_COLUMNS])


def sweep_payload(result: SweepResult, config: LabConfig) -> dict:
    return {
        "command": "sweep",
        "config": config.model_dump(mode="json"),
        "t_max": result.t_max,
        "verdict": result.verdict,
        "reasons": result.reasons,
        "records": [r.to_dict() for r in result.records],
    }


def convergence_payload(result: ConvergenceResult, config: LabConfig) -> dict:
    return {
        "command": "converge",
        "config": config.model_dump(mode="json"),
        "exact": result.exact,
        "verdict": result.verdict,
        "reasons": result.reasons,
        "rows": [r.to_dict() for r in result.rows],
    }


def deriv_payload(result: DerivCheckResult, config: LabConfig) -> dict:
    return {
        "command": "deriv-check",
        "config": config.model_dump(mode="json"),
        "verdict": result.verdict,
        "reasons": result.reasons,
        "reports": [r.model_dump() for r in result.reports],
    }


def write_json(payload: dict, stream: IO[str]):
    json.dump(payload, stream, indent=2)
    stream.write("\n")


def _fmt(value, spec: str = ".8g") -> str:
    return "-" if value is None else format(value, spec)


def sweep_table(result: SweepResult) -> Table:
    table = Table(title=f"Offset sweep ({result.verdict})")
    for name in ("t", "sigma", "sigma'", "sigma''", "bounds", "gap"):
        table.add_column(name, justify="right")
    for rec in result.records:
        if rec.failed:
            table.add_row(_fmt(rec.t, ".6g"), "[red]failed[/red]", "", "", "", "")
            continue
        bounds = "-" if rec.lower_bound is None else f"[{rec.lower_bound:.4g}, {rec.upper_bound:.4g}]"
        table.add_row(
            _fmt(rec.t, ".6g"),
            _fmt(rec.sigma, ".10g"),
            _fmt(rec.sigma_prime, ".6g"),
            _fmt(rec.sigma_second_bvp, ".6g"),
            bounds,
            _fmt(rec.sigma2_gap, ".4g"),
        )
    return table


def convergence_table(result: ConvergenceResult) -> Table:
    table = Table(title=f"Mesh convergence vs {result.exact:.10g} ({result.verdict})")
    for name in CONVERGENCE_COLUMNS:
        table.add_column(name, justify="right")
    for row in result.rows:
        table.add_row(
            f"{row.h:g}", f"{row.sigma:.10g}", f"{row.error:.3e}", _fmt(row.order, ".3f"), str(row.triangles)
        )
    return table


def deriv_table(result: DerivCheckResult) -> Table:
    table = Table(title=f"Derivative check ({result.verdict})")
    for name in ("t", "h", "sigma'", "fd'", "sigma'' (bvp)", "sigma'' (3-term)", "fd''"):
        table.add_column(name, justify="right")
    for rep in result.reports:
        table.add_row(
            _fmt(rep.t, ".6g"),
            _fmt(rep.h, "g"),
            _fmt(rep.sigma_prime),
            _fmt(rep.fd_first),
            _fmt(rep.sigma_second_bvp),
            _fmt(rep.sigma_second),
            _fmt(rep.fd_second),
        )
    return table


def write_reports_csv(result: DerivCheckResult, stream: IO[str]):
    rows = [r.model_dump() for r in result.reports]
    columns = list(rows[0]) if rows else []
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[k]) for k in columns])
