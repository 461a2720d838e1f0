"""One-axis parameter sweeps over episode seeds."""

from __future__ import annotations

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Callable, Sequence

from .config import ScenarioConfig, apply_overrides
from .engine import RunResult, run_episode


def _ticks_per_slot(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    # deadlines stay in milliseconds, so the safe ages rescale with the tick
    return apply_overrides(cfg, {"timescale.ticks_per_slot": int(value)})


def _ho_mean(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    out = cfg.handover.outage
    mean = float(value)
    floor = min(out.min_ms, mean - 2.0 * out.std_ms)
    return replace(cfg, handover=replace(cfg.handover,
                                         outage=replace(out, mean_ms=mean, min_ms=floor)))


def _period(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    return replace(cfg, handover=replace(cfg.handover, period_s=float(value)))


def _penalty_weight(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    return replace(cfg, policy=replace(cfg.policy, V=float(value)))


AXES: dict[str, Callable[[ScenarioConfig, Any], ScenarioConfig]] = {
    "ticks_per_slot": _ticks_per_slot,
    "ho_mean_ms": _ho_mean,
    "ho_period_s": _period,
    "dpp_V": _penalty_weight,
}


def apply_axis(cfg: ScenarioConfig, axis: str, value: Any) -> ScenarioConfig:
    """Config at one sweep coordinate.

    Moving the outage mean also lowers the truncation floor to at most two
    standard deviations below it, so small means stay reachable.
    """
    if axis not in AXES:
        raise KeyError(f"unknown sweep axis {axis!r}; choose from {', '.join(AXES)}")
    return AXES[axis](cfg, value)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple[Any, ...]
    seeds: tuple[int, ...]
    base: ScenarioConfig = ScenarioConfig()

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise KeyError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ValueError("a sweep needs at least one axis value")
        if not self.seeds:
            raise ValueError("a sweep needs at least one seed")

    def points(self) -> list[tuple[Any, int]]:
        return [(v, s) for v in self.values for s in self.seeds]


@dataclass
class SweepPoint:
    axis: str
    axis_value: Any
    seed: int
    result: RunResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_point(args: tuple[ScenarioConfig, str, Any, int]) -> SweepPoint:
    base, axis, value, seed = args
    try:
        cfg = apply_axis(base, axis, value)
        return SweepPoint(axis, value, seed, run_episode(cfg, seed=seed))
    except Exception as exc:  # recorded per point; the sweep carries on
        detail = "".join(traceback.format_exception_only(type(exc), exc)).strip()
        return SweepPoint(axis, value, seed, None, detail)


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepPoint]:
    """Run every (value, seed) point; results come back in grid order.

    A point's random streams depend only on its seed, never on the axis
    value or on scheduling, so all values of a sweep see common random
    numbers and ``workers`` cannot change any result.
    """
    jobs = [(spec.base, spec.axis, v, s) for v, s in spec.points()]
    if workers <= 1 or len(jobs) == 1:
        return [_run_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_point, jobs))


def group_by_value(points: Sequence[SweepPoint]) -> dict[Any, list[RunResult]]:
    """Successful results per axis value, in first-seen order."""
    out: dict[Any, list[RunResult]] = {}
    for p in points:
        if p.ok:
            out.setdefault(p.axis_value, []).append(p.result)
    return out
