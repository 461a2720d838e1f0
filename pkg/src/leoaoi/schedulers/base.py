"""Shared policy types: actions, observations and controller configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol

import numpy as np

from ..channel import FadingPool

NO_SATELLITE = -1


class HandoverKind(str, Enum):
    NONE = "none"
    DISCRETIONARY = "discretionary"
    FORCED = "forced"


def flag_patterns(classes: int) -> np.ndarray:
    """Every transmit-flag combination; row ``i`` encodes the bits of ``i``."""
    idx = np.arange(2**classes)
    return ((idx[:, None] >> np.arange(classes)[None, :]) & 1).astype(bool)


def log_power_grid(p_max: float, levels: int = 8, ratio: float = 100.0) -> tuple[float, ...]:
    return tuple(float(x) for x in np.geomspace(p_max / ratio, p_max, levels))


@dataclass(frozen=True)
class Action:
    serving_satellite: int
    priority_flags: tuple[bool, ...]
    power: float
    handover_horizon: int = 0
    handover_kind: HandoverKind = HandoverKind.NONE

    @property
    def transmits(self) -> bool:
        return self.power > 0 and any(self.priority_flags) and self.serving_satellite >= 0


@dataclass(frozen=True)
class ObservedState:
    """Per-vehicle view consumed by the controller."""

    ages: tuple[int, ...]
    safety_queues: tuple[float, ...]
    q_power: float
    q_handover: float
    channel_gain: float
    visibility_window: int
    best_candidate_gain: float
    interference_prev: float
    serving: int = NO_SATELLITE


@dataclass(frozen=True)
class PolicyConfig:
    V: float = 50.0
    power_grid: tuple[float, ...] = log_power_grid(10.0)
    horizon_cap: int = 10
    kappa_safe: float = 5.0
    z_scale: float = 10.0
    mu_n: float | None = None
    t_pre: float = 0.0
    proactive: bool = True

    def __post_init__(self) -> None:
        if self.V <= 0:
            raise ValueError("V must be positive")
        if not self.power_grid or min(self.power_grid) <= 0:
            raise ValueError("power grid must be nonempty and positive")
        if self.horizon_cap < 0 or self.z_scale <= 0 or self.kappa_safe < 0:
            raise ValueError("invalid proactive parameters")


@dataclass(frozen=True)
class LinkModel:
    """Static per-episode quantities every policy may use."""

    noise_power: float
    p_max: float
    p_ho: float
    n_vehicles: int
    ticks_per_slot: int
    n_safe: tuple[int, ...]
    epsilon: tuple[float, ...]
    weights: tuple[float, ...]
    outage_ticks: int
    mean_outage_ticks: float
    ho_budget: float
    rate_min: tuple[float, ...]
    beam_gain: float
    sidelobe_gain: float
    mean_fading: float
    pool: FadingPool = field(repr=False)

    @property
    def reference_power(self) -> float:
        return self.p_max / self.n_vehicles

    @property
    def classes(self) -> int:
        return len(self.n_safe)


@dataclass
class SlotObservation:
    """Everything a policy sees at the start of slot ``t``.

    Satellite axes use episode-local indices; ``sat_ids`` maps them to
    constellation ids. ``gain`` is received power per transmitted watt
    before beam gain and fading, ``interference`` the previous slot's
    interference estimate in watts with each vehicle's own emission removed,
    and ``measured_gain`` a fresh single-draw measurement of
    ``gain * fading``.
    """

    t: int
    serving: np.ndarray
    serviceable: np.ndarray
    windows: np.ndarray
    gain: np.ndarray
    interference: np.ndarray
    measured_gain: np.ndarray
    ages: np.ndarray
    z: np.ndarray
    q_power: float
    q_handover: float
    sat_ids: np.ndarray

    def observed_state(self, v: int, link: LinkModel) -> ObservedState:
        cur = int(self.serving[v])
        mean_gain = self.gain[v] * link.beam_gain * link.mean_fading
        own = float(mean_gain[cur]) if cur >= 0 else 0.0
        visible = self.serviceable[v]
        best = float(mean_gain[visible].max()) if visible.any() else 0.0
        return ObservedState(
            tuple(int(a) for a in self.ages[v]),
            tuple(float(z) for z in self.z[v]),
            self.q_power,
            self.q_handover,
            own,
            int(self.windows[v, cur]) if cur >= 0 else 0,
            best,
            float(self.interference[v, cur]) if cur >= 0 else 0.0,
            cur,
        )


class Policy(Protocol):
    name: str

    def reset(self, link: LinkModel) -> None: ...

    def decide(self, obs: SlotObservation) -> list[Action]: ...


def handover_kind(current: int, target: int, current_serviceable: bool) -> HandoverKind:
    if target == current:
        return HandoverKind.NONE
    if current < 0 or not current_serviceable:
        return HandoverKind.FORCED
    return HandoverKind.DISCRETIONARY
