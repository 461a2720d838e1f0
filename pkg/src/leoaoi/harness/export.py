"""CSV and JSON export of per-class episode metrics."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Sequence

from .engine import RunResult
from .sweep import SweepPoint

COLUMNS = ("experiment", "seed", "axis", "axis_value", "class", "mean_aoi_ticks",
           "violation_rate", "epsilon", "compliant", "mean_power_w", "forced_ho", "disc_ho",
           "pingpong_events")


def sig6(x: float) -> float:
    """Round to 6 significant digits."""
    return float(f"{float(x):.6g}")


def result_records(result: RunResult, axis: str = "", axis_value: Any = "",
                   experiment: str | None = None) -> list[dict[str, Any]]:
    """One record per priority class, classes numbered from 1."""
    rows = []
    for m in range(len(result.mean_aoi)):
        rows.append({
            "experiment": experiment or result.policy,
            "seed": int(result.seed),
            "axis": axis,
            "axis_value": axis_value if isinstance(axis_value, str) else sig6(axis_value),
            "class": m + 1,
            "mean_aoi_ticks": sig6(result.mean_aoi[m]),
            "violation_rate": sig6(result.violation_rate[m]),
            "epsilon": sig6(result.epsilon[m]),
            "compliant": bool(result.compliant[m]),
            "mean_power_w": sig6(result.mean_power_w),
            "forced_ho": int(result.forced_ho),
            "disc_ho": int(result.disc_ho),
            "pingpong_events": int(result.pingpong_events),
        })
    return rows


def records(results: Iterable[RunResult | SweepPoint]) -> list[dict[str, Any]]:
    """Flatten runs or sweep points; failed sweep points are skipped."""
    out: list[dict[str, Any]] = []
    for item in results:
        if isinstance(item, SweepPoint):
            if item.ok:
                out.extend(result_records(item.result, item.axis, item.axis_value))
        else:
            out.extend(result_records(item))
    return out


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def to_csv(rows: Sequence[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in COLUMNS])
    return buf.getvalue()


def to_json(rows: Sequence[dict[str, Any]]) -> str:
    return json.dumps([{c: row[c] for c in COLUMNS} for row in rows], indent=2) + "\n"


def export_results(results: Sequence[RunResult | SweepPoint], fmt: str,
                   path: str | Path) -> Path:
    """Write ``results`` as ``csv`` or ``json`` to ``path``.

    Raises ``ValueError`` on empty input (nothing is written) and ``OSError``
    naming the path when it cannot be written.
    """
    rows = records(results)
    if not rows:
        raise ValueError("no results to export")
    if fmt == "csv":
        text = to_csv(rows)
    elif fmt == "json":
        text = to_json(rows)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return list(reader)
