"""Forced ping-pong traces with reconnection disabled."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..aoi import age_trajectory
from ..analysis import PingPongEvent, detect_pingpong
from .config import ScenarioConfig

MAX_INJECTED = 7


@dataclass(frozen=True)
class PingPongTrace:
    """Tick ages and slot-end summary of an injected oscillation."""

    k: int
    a0: int
    ticks_per_slot: int
    ages: np.ndarray
    serving: np.ndarray
    events: tuple[PingPongEvent, ...]

    @property
    def slot_end_ages(self) -> np.ndarray:
        return self.ages[self.ticks_per_slot - 1::self.ticks_per_slot]

    @property
    def end_age(self) -> int:
        return int(self.ages[-1])

    @property
    def cumulative(self) -> int:
        return int(self.slot_end_ages.sum())


def inject_pingpong(cfg: ScenarioConfig, k: int, a0: int) -> PingPongTrace:
    """Alternate between two satellites for ``k`` consecutive handover slots.

    Every handover outage is stretched over the whole slot, so no tick can
    deliver an update and the age climbs from ``a0`` without reset.
    """
    if not 1 <= k <= MAX_INJECTED:
        raise ValueError(f"k must lie in 1..{MAX_INJECTED}")
    if a0 < 1:
        raise ValueError("a0 must be at least 1")
    n = cfg.timescale.ticks_per_slot
    # slot 0 is the pre-oscillation association on satellite 0
    serving = np.array([0] + [(j + 1) % 2 for j in range(k)])
    handover = np.array([False] + [True] * k)
    success = np.zeros(k * n, dtype=bool)  # every tick lies inside an outage
    ages = age_trajectory(np.int64(a0), success)
    events = tuple(detect_pingpong(handover, serving, 0))
    return PingPongTrace(k, a0, n, ages, serving, events)
