"""Two-timescale clock, tick-level age bookkeeping and slot summaries.

Ages are integer tick counts everywhere. The global tick index of tick ``n``
in slot ``t`` is ``t * ticks_per_slot + n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import stats

_FLOOR_EPS = 1e-9


def _floor_ratio(numerator: float, denominator: float) -> tuple[int, float]:
    ratio = numerator / denominator
    whole = math.floor(ratio + _FLOOR_EPS)
    return whole, max(ratio - whole, 0.0)


@dataclass(frozen=True)
class TimescaleConfig:
    slot_seconds: float = 1.0
    tick_seconds: float = 0.02

    def __post_init__(self) -> None:
        if self.slot_seconds <= 0 or self.tick_seconds <= 0:
            raise ValueError("slot and tick lengths must be positive")
        ratio = self.slot_seconds / self.tick_seconds
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ValueError("slot length must be an integer multiple of the tick length")

    @property
    def ticks_per_slot(self) -> int:
        return int(round(self.slot_seconds / self.tick_seconds))

    @classmethod
    def from_ticks_per_slot(cls, ticks_per_slot: int, slot_seconds: float = 1.0) -> "TimescaleConfig":
        return cls(slot_seconds, slot_seconds / ticks_per_slot)


@dataclass(frozen=True)
class TickRuleReport:
    passed: bool
    tick_seconds: float
    bound_seconds: float
    n_safe_min: int
    n_ho: int


def validate_tick_rule(cfg: TimescaleConfig, delta_safe_min: float,
                       tau_ho_min: float) -> TickRuleReport:
    """Check that the tick resolves both the tightest deadline and the
    shortest outage with at least two ticks of margin."""
    bound = min(delta_safe_min, tau_ho_min) / 2.0
    n_safe_min, _ = _floor_ratio(delta_safe_min, cfg.tick_seconds)
    n_ho, _ = _floor_ratio(tau_ho_min, cfg.tick_seconds)
    ok = cfg.tick_seconds <= bound * (1 + 1e-12) and n_safe_min >= 2 and n_ho >= 1
    return TickRuleReport(ok, cfg.tick_seconds, bound, n_safe_min, n_ho)


@dataclass(frozen=True)
class SafetyThresholds:
    n_safe: tuple[int, ...] = (5, 10, 50)
    epsilon: tuple[float, ...] = (0.01, 0.05, 0.20)
    weights: tuple[float, ...] = (5.0, 2.0, 0.5)

    def __post_init__(self) -> None:
        if not len(self.n_safe) == len(self.epsilon) == len(self.weights):
            raise ValueError("per-class tuples must have equal length")
        if any(b <= a for a, b in zip(self.n_safe, self.n_safe[1:])):
            raise ValueError("n_safe must be strictly increasing")
        if any(b <= a for a, b in zip(self.epsilon, self.epsilon[1:])):
            raise ValueError("epsilon must be strictly increasing")
        if any(b >= a for a, b in zip(self.weights, self.weights[1:])) or min(self.weights) <= 0:
            raise ValueError("weights must be positive and strictly decreasing")
        if any(not 0 < e <= 1 for e in self.epsilon):
            raise ValueError("epsilon must lie in (0, 1]")

    @property
    def num_classes(self) -> int:
        return len(self.n_safe)

    @classmethod
    def from_deadlines(cls, deadlines_s: Sequence[float], tick_seconds: float,
                       epsilon: Sequence[float], weights: Sequence[float]) -> "SafetyThresholds":
        """Map physical deadlines to whole ticks (rounded down)."""
        n_safe = tuple(_floor_ratio(d, tick_seconds)[0] for d in deadlines_s)
        return cls(n_safe, tuple(epsilon), tuple(weights))


@dataclass(frozen=True)
class OutageModel:
    """Handover interruption: normal in milliseconds, truncated below at ``min_ms``."""

    mean_ms: float = 225.0
    std_ms: float = 25.0
    min_ms: float = 150.0

    def __post_init__(self) -> None:
        if self.min_ms <= 0 or self.std_ms < 0:
            raise ValueError("min_ms must be positive and std_ms non-negative")

    def sample_ms(self, rng: np.random.Generator, size: int | tuple[int, ...] | None = None):
        if self.std_ms == 0:
            return np.full(size if size is not None else (), max(self.mean_ms, self.min_ms))
        lower = (self.min_ms - self.mean_ms) / self.std_ms
        return stats.truncnorm.rvs(lower, np.inf, loc=self.mean_ms, scale=self.std_ms,
                                   size=size, random_state=rng)


def outage_ticks(tau_ho: float, tick_seconds: float) -> tuple[int, float]:
    """Whole outage ticks and the discarded fraction of a tick."""
    if tau_ho < tick_seconds * (1 - 1e-12):
        raise ValueError("outage shorter than one tick")
    return _floor_ratio(tau_ho, tick_seconds)


@dataclass(frozen=True)
class AoiState:
    age_ticks: int = 1
    last_reset_tick: int = 0
    tick: int = 0


def tick_update(state: AoiState, success: bool) -> AoiState:
    """Advance one tick: reset to 1 on success, otherwise grow by one."""
    nxt = state.tick + 1
    if success:
        return AoiState(1, nxt, nxt)
    return replace(state, age_ticks=state.age_ticks + 1, tick=nxt)


def age_trajectory(a0, success: np.ndarray) -> np.ndarray:
    """Ages after each tick along the last axis, for any leading batch shape.

    ``a0`` broadcasts against ``success[..., 0]``.
    """
    success = np.asarray(success, dtype=bool)
    n = success.shape[-1]
    idx = np.arange(1, n + 1)
    last = np.maximum.accumulate(np.where(success, idx, 0), axis=-1)
    a0 = np.asarray(a0, dtype=np.int64)[..., None]
    return np.where(last > 0, idx - last + 1, a0 + idx)


def slot_summary(age_start: int, connected: bool, any_tick_success: bool, ticks_per_slot: int) -> int:
    return 1 if connected and any_tick_success else age_start + ticks_per_slot


def expected_slot_increment(age: float, p_succ: float, ticks_per_slot: int) -> float:
    if not 0 <= p_succ <= 1:
        raise ValueError("p_succ must lie in [0, 1]")
    return ticks_per_slot - p_succ * (ticks_per_slot + age - 1)


def follower_aoi(pl_age: int, v2v_delay_ticks: int) -> int:
    if v2v_delay_ticks < 0:
        raise ValueError("V2V delay must be non-negative")
    return pl_age + v2v_delay_ticks


def v2v_delay_ticks(hop_index: int, gap_m: float, metres_per_tick: float = 60.0) -> int:
    """Deterministic one-hop V2V delay for the follower ``hop_index`` places
    behind the leader, rounded half up to whole ticks."""
    if hop_index < 0 or gap_m < 0:
        raise ValueError("hop index and gap must be non-negative")
    return int(math.floor(hop_index * gap_m / metres_per_tick + 0.5))


def slot_power(transmit_flags: Sequence[int], powers: Sequence[float],
               handover_flags: Sequence[int], p_ho: float) -> float:
    d = np.asarray(transmit_flags, dtype=float)
    p = np.asarray(powers, dtype=float)
    h = np.asarray(handover_flags, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be non-negative")
    return float(np.sum(d * p) + np.sum(h) * p_ho)


@dataclass(frozen=True)
class PhaseDecomposition:
    conn_fraction: float
    conn_mean_aoi: float
    ho_fraction: float
    ho_mean_aoi: float
    total_mean: float

    def recombined(self) -> float:
        return self.conn_fraction * self.conn_mean_aoi + self.ho_fraction * self.ho_mean_aoi


def phase_decomposition(ages: np.ndarray, in_handover: np.ndarray) -> PhaseDecomposition:
    """Split the mean age into connected-phase and handover-phase parts.

    A phase with no ticks reports a mean of 0 so that the weighted identity
    still holds.
    """
    ages = np.asarray(ages, dtype=float).ravel()
    ho = np.asarray(in_handover, dtype=bool).ravel()
    if ages.size == 0:
        raise ValueError("empty tick log")
    if ho.shape != ages.shape:
        raise ValueError("age and phase logs differ in length")
    n = ages.size
    n_ho = int(ho.sum())
    n_conn = n - n_ho
    conn_mean = float(ages[~ho].sum() / n_conn) if n_conn else 0.0
    ho_mean = float(ages[ho].sum() / n_ho) if n_ho else 0.0
    return PhaseDecomposition(n_conn / n, conn_mean, n_ho / n, ho_mean, float(ages.sum() / n))


def seconds_from_ticks(ticks: float, tick_seconds: float) -> float:
    return ticks * tick_seconds
