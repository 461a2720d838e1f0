"""Closed-form oracles for handover-induced age spikes, plus a literal tick simulator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class SpikeEnvelope:
    end_age: int
    cumulative: int
    k: int
    a0: int
    variance: float = 0.0


def spike_envelope(a0: int, k: int, ticks_per_slot: int) -> SpikeEnvelope:
    """Slot-end ages after ``k`` back-to-back handover slots with no reconnection."""
    if a0 < 1 or k < 1:
        raise ValueError("a0 and k must be at least 1")
    n = ticks_per_slot
    return SpikeEnvelope(a0 + k * n, k * a0 + k * (k + 1) // 2 * n, k, a0)


def spike_cost_ratios(k: int, ticks_per_slot: int, a0: int = 1) -> dict[str, float]:
    """Two readings of how much a k-long ping-pong costs versus k isolated handovers.

    ``quadratic_term``: growth term of the sequence over k isolated single-slot
    spikes, ``(k+1)/2``. ``cumulative``: full cumulative sum over k isolated
    spikes that each start from ``a0``.
    """
    seq = spike_envelope(a0, k, ticks_per_slot)
    single = spike_envelope(a0, 1, ticks_per_slot)
    return {
        "quadratic_term": (k * (k + 1) / 2) / k,
        "cumulative": seq.cumulative / (k * single.cumulative),
    }


def brute_force_tick_oracle(a0: int, schedule: Sequence[bool]) -> list[int]:
    """Age after every tick, applying the reset/increment rule one tick at a time."""
    ages = []
    age = a0
    for ok in schedule:
        age = 1 if ok else age + 1
        ages.append(age)
    return ages


def refined_increment_bound(n_ho: int, ticks_per_slot: int, p_s) -> float:
    """Upper bound on the expected age increment of a handover slot.

    ``p_s`` is a constant per-tick reconnection probability or a sequence with
    one entry per post-outage tick.
    """
    if not 1 <= n_ho <= ticks_per_slot:
        raise ValueError("n_ho must lie in [1, ticks_per_slot]")
    attempts = ticks_per_slot - n_ho
    p = np.broadcast_to(np.asarray(p_s, dtype=float), (attempts,)) if np.ndim(p_s) == 0 \
        else np.asarray(p_s, dtype=float)
    if p.shape != (attempts,):
        raise ValueError("per-tick sequence must cover every post-outage tick")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    return float(n_ho + attempts * np.prod(1.0 - p))


def _per_tick(p_s, attempts: int) -> np.ndarray:
    if np.ndim(p_s) == 0:
        return np.full(attempts, float(p_s))
    p = np.asarray(p_s, dtype=float)
    if p.shape != (attempts,):
        raise ValueError("per-tick sequence must cover every post-outage tick")
    return p


def exact_handover_increment(a0: int, n_ho: int, ticks_per_slot: int, p_s) -> float:
    """Exact expected slot-end age minus ``a0`` for a handover slot.

    Enumerates the position of the last successful reconnection tick.
    """
    n = ticks_per_slot
    p = _per_tick(p_s, n - n_ho)
    # survival[j] = prod_{i > j} (1 - p_i) over attempt ticks
    tail = np.append(np.cumprod((1.0 - p)[::-1])[::-1][1:], 1.0)
    ticks = np.arange(n_ho + 1, n + 1)
    end_if_last = n - ticks + 1
    none = float(np.prod(1.0 - p))
    return float(np.sum(p * tail * (end_if_last - a0)) + none * n)


def simulate_handover_increments(a0: int, n_ho: int, ticks_per_slot: int, p_s,
                                 slots: int, rng: np.random.Generator) -> np.ndarray:
    """Monte-Carlo slot-end age increments over independent handover slots."""
    n = ticks_per_slot
    p = _per_tick(p_s, n - n_ho)
    success = rng.random((slots, p.size)) < p
    ticks = np.arange(n_ho + 1, n + 1)
    last = np.where(success, ticks, 0).max(axis=1)
    end = np.where(last > 0, n - last + 1, a0 + n)
    return end - a0


def drift_constant(dp_max: float, dh_max: float, ticks_per_slot: int,
                   epsilons: Sequence[float], n_vehicles: int) -> float:
    """Constant bounding the one-slot Lyapunov drift."""
    eps = np.asarray(epsilons, dtype=float)
    safety = n_vehicles * float(np.sum((ticks_per_slot * (1.0 - eps)) ** 2))
    return 0.5 * (dp_max**2 + dh_max**2 + safety)


def reactive_infeasibility_check(n_ho: int, n_safe_1: int) -> bool:
    """True when a single outage already exceeds the tightest deadline."""
    return n_ho >= n_safe_1


@dataclass(frozen=True)
class PingPongEvent:
    vehicle: int
    slots: tuple[int, ...]
    length: int
    satellites: tuple[int, ...]


def detect_pingpong(handover: Sequence[bool], serving: Sequence[int],
                    vehicle: int = 0) -> list[PingPongEvent]:
    """Maximal runs of consecutive handover slots that bounce between satellites.

    From its third slot on, a run may only grow by returning to the satellite
    served two slots earlier. A run counts as an event once it holds at least
    one such return; the lookback may reach the slot just before the run.
    """
    h = [bool(x) for x in handover]
    s = list(serving)
    if len(h) != len(s):
        raise ValueError("handover and serving logs differ in length")
    returns = [t >= 2 and s[t] == s[t - 2] for t in range(len(s))]
    events: list[PingPongEvent] = []
    run: list[int] = []

    def flush() -> bool:
        if len(run) >= 2 and any(returns[i] for i in run[1:]):
            sats = tuple(sorted({int(s[i]) for i in run}))
            events.append(PingPongEvent(vehicle, tuple(run), len(run), sats))
            return True
        return False

    for t in range(len(h)):
        if not h[t]:
            flush()
            run = []
        elif not run or len(run) < 2 or returns[t]:
            run.append(t)
        else:
            # restart from the previous slot unless it already belongs to an event
            run = [t] if flush() else [t - 1, t]
    flush()
    return events
