"""Compliance tables and figures from exported CSV results."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .export import COLUMNS, read_csv


def mean_ci(values: Sequence[float], level: float = 0.95) -> tuple[float, float]:
    """Sample mean and Student-t half-width; the half-width is 0 for one sample."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    if x.size == 1:
        return float(x[0]), 0.0
    half = stats.t.ppf(0.5 + level / 2.0, x.size - 1) * x.std(ddof=1) / math.sqrt(x.size)
    return float(x.mean()), float(half)


@dataclass(frozen=True)
class Cell:
    mean: float
    half_width: float
    epsilon: float
    compliant_runs: int
    runs: int

    def text(self) -> str:
        return f"{self.mean:.4f} ± {self.half_width:.4f}"


def _group_key(row: dict[str, str]) -> tuple[str, str, str]:
    return row["experiment"], row["axis"], row["axis_value"]


def summarize(rows: Iterable[dict[str, str]]) -> dict[tuple[str, str, str], dict[int, Cell]]:
    """Per (experiment, axis, value) and class: violation-rate mean and CI over seeds."""
    acc: dict[tuple[str, str, str], dict[int, list[dict[str, str]]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        acc[_group_key(row)][int(row["class"])].append(row)
    out = {}
    for key, classes in acc.items():
        out[key] = {}
        for m, items in sorted(classes.items()):
            mean, half = mean_ci([float(r["violation_rate"]) for r in items])
            out[key][m] = Cell(mean, half, float(items[0]["epsilon"]),
                               sum(r["compliant"] == "true" for r in items), len(items))
    return out


def _sort_key(key: tuple[str, str, str]):
    exp, axis, value = key
    try:
        num = float(value)
    except ValueError:
        num = math.nan
    return axis, exp, num if not math.isnan(num) else 0.0, value


def compliance_table(rows: Sequence[dict[str, str]]) -> str:
    """Violation rates per policy and class with the budget in the header."""
    summary = summarize(rows)
    if not summary:
        return "no results\n"
    classes = sorted({m for cells in summary.values() for m in cells})
    first = next(iter(summary.values()))
    head = ["policy", "axis"] + [f"class {m} (eps {first[m].epsilon:g})" for m in classes] + ["compliant"]
    body = []
    for key in sorted(summary, key=_sort_key):
        exp, axis, value = key
        cells = summary[key]
        where = f"{axis}={value}" if axis else "-"
        ok = " ".join(f"{cells[m].compliant_runs}/{cells[m].runs}" for m in classes)
        body.append([exp, where] + [cells[m].text() for m in classes] + [ok])
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    line = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()
    return "\n".join([line(head), line(["-" * w for w in widths])] + [line(r) for r in body]) + "\n"


def load_rows(directory: str | Path) -> list[dict[str, str]]:
    """Rows of every result CSV in ``directory``; other CSV files are ignored."""
    rows = []
    for path in sorted(Path(directory).glob("*.csv")):
        with open(path, encoding="utf-8") as fh:
            if fh.readline().strip() != ",".join(COLUMNS):
                continue
        rows.extend(read_csv(path))
    return rows


def render_figures(rows: Sequence[dict[str, str]], out_dir: str | Path) -> list[Path]:
    """Write PNG figures for the policy comparison and any sweeps present."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = summarize(rows)
    written: list[Path] = []

    plain = sorted(k for k in summary if not k[1])
    if plain:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        names = [k[0] for k in plain]
        means = [summary[k][1].mean for k in plain]
        errs = [summary[k][1].half_width for k in plain]
        ax.bar(names, means, yerr=errs, capsize=4, color="0.6", edgecolor="k")
        ax.axhline(summary[plain[0]][1].epsilon, ls="--", color="C3", label="class-1 budget")
        ax.set_ylabel("class-1 violation rate")
        ax.set_yscale("log")
        ax.legend()
        fig.tight_layout()
        path = out_dir / "violation_by_policy.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    axes = sorted({(k[0], k[1]) for k in summary if k[1]})
    for exp, axis in axes:
        keys = sorted((k for k in summary if k[0] == exp and k[1] == axis), key=lambda k: float(k[2]))
        x = [float(k[2]) for k in keys]
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for m in sorted(summary[keys[0]]):
            y = [summary[k][m].mean for k in keys]
            e = [summary[k][m].half_width for k in keys]
            ax.errorbar(x, y, yerr=e, marker="o", capsize=3, label=f"class {m}")
        ax.axhline(summary[keys[0]][1].epsilon, ls="--", color="C3", lw=1)
        ax.set_xlabel(axis)
        ax.set_ylabel("violation rate")
        if axis == "dpp_V":
            ax.set_xscale("log")
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"sweep_{exp}_{axis}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
        if axis == "dpp_V":
            written.append(_pareto(rows, exp, out_dir, plt))
    return written


def _pareto(rows: Sequence[dict[str, str]], exp: str, out_dir: Path, plt) -> Path:
    pts: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for r in rows:
        if r["experiment"] == exp and r["axis"] == "dpp_V" and r["class"] == "1":
            pts[r["axis_value"]].append((float(r["mean_power_w"]), float(r["mean_aoi_ticks"])))
    fig, ax = plt.subplots(figsize=(5, 4))
    for value in sorted(pts, key=float):
        p, a = np.mean(pts[value], axis=0)
        ax.plot(p, a, "o", color="C0")
        ax.annotate(f"V={value}", (p, a), textcoords="offset points", xytext=(4, 4), fontsize=8)
    ax.set_xlabel("mean total power (W)")
    ax.set_ylabel("class-1 mean AoI (ticks)")
    fig.tight_layout()
    path = out_dir / f"pareto_{exp}.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
