"""Command-line entry point: simulate, sweep, validate-theory, report, defaults."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .config import default_config_text, load_config
from .engine import run_episode
from .export import export_results, read_csv
from .report import compliance_table, load_rows, render_figures
from .sweep import AXES, SweepSpec, run_sweep
from .theory import theory_checks

log = logging.getLogger("leoaoi")


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _numbers(text: str) -> tuple[float | int, ...]:
    out = []
    for x in text.split(","):
        x = x.strip()
        if x:
            out.append(int(x) if x.lstrip("-").isdigit() else float(x))
    return tuple(out)


def _write(results, out: Path, stem: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    export_results(results, "csv", out / f"{stem}.csv")
    export_results(results, "json", out / f"{stem}.json")
    log.info("wrote %s", out / f"{stem}.csv")


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    seeds = args.seeds or ((args.seed,) if args.seed is not None else (cfg.seed,))
    policies = args.policies.split(",") if args.policies else [cfg.policy_name]
    results = []
    for name in policies:
        pcfg = replace(cfg, policy_name=name)
        for seed in seeds:
            log.info("simulating %s seed %d", name, seed)
            results.append(run_episode(pcfg, seed=seed))
    _write(results, Path(args.out), "simulate")
    print(compliance_table(read_csv(Path(args.out) / "simulate.csv")), end="")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.policy:
        cfg = replace(cfg, policy_name=args.policy)
    spec = SweepSpec(args.axis, _numbers(args.values), args.seeds or (cfg.seed,), cfg)
    points = run_sweep(spec, workers=args.workers)
    failed = [p for p in points if not p.ok]
    for p in failed:
        log.error("point %s=%s seed %d failed: %s", p.axis, p.axis_value, p.seed, p.error)
    if len(failed) < len(points):
        _write(points, Path(args.out), f"sweep_{args.axis}")
    return 1 if failed else 0


def cmd_validate_theory(args: argparse.Namespace) -> int:
    checks = theory_checks(slots=args.slots, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "theory.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["check", "params", "expected", "measured", "ok"])
        for c in checks:
            writer.writerow([c.name, c.params, f"{c.expected:.6g}", f"{c.measured:.6g}",
                             "true" if c.ok else "false"])
    bad = [c for c in checks if not c.ok]
    for c in bad:
        print(f"MISMATCH {c.name} {c.params}: expected {c.expected:.6g}, got {c.measured:.6g}")
    print(f"{len(checks) - len(bad)}/{len(checks)} theory checks passed")
    return 1 if bad else 0


def cmd_report(args: argparse.Namespace) -> int:
    rows = load_rows(args.input)
    if not rows:
        print(f"no result CSV files in {args.input}", file=sys.stderr)
        return 1
    print(compliance_table(rows), end="")
    figures = Path(args.figures) if args.figures else Path(args.input) / "figures"
    for path in render_figures(rows, figures):
        print(f"figure: {path}")
    return 0


def cmd_defaults(args: argparse.Namespace) -> int:
    print(default_config_text(), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leoaoi", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run episodes and export per-class metrics")
    p.add_argument("--config", help="scenario file (defaults when omitted)")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=_ints, help="comma-separated seeds; overrides --seed")
    p.add_argument("--policies", help="comma-separated policies, e.g. dpp,rr,mvt,mrss")
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="sweep one axis over several seeds")
    p.add_argument("--config")
    p.add_argument("--axis", required=True, choices=sorted(AXES))
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument("--seeds", type=_ints, help="comma-separated seeds")
    p.add_argument("--policy")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-theory", help="check closed forms against oracles")
    p.add_argument("--out", default="results")
    p.add_argument("--slots", type=int, default=100_000, help="Monte-Carlo handover slots")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate_theory)

    p = sub.add_parser("report", help="print compliance tables and render figures")
    p.add_argument("--in", dest="input", required=True, help="directory of result CSVs")
    p.add_argument("--figures", help="figure directory (default <in>/figures)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("defaults", help="print the default scenario file")
    p.set_defaults(func=cmd_defaults)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
