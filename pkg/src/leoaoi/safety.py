"""Virtual queues, violation counting, compliance reporting and the Slater check."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aoi import SafetyThresholds


def update_safety_queue(z: float, violated: bool, epsilon: float) -> float:
    if z < 0:
        raise ValueError("queue backlog must be non-negative")
    return max(z + (1.0 if violated else 0.0) - epsilon, 0.0)


def update_power_queue(q: float, p_tot: float, p_max: float) -> float:
    if q < 0:
        raise ValueError("queue backlog must be non-negative")
    return max(q + p_tot - p_max, 0.0)


def update_ho_queue(q: float, disc_count: int, budget: float) -> float:
    if q < 0:
        raise ValueError("queue backlog must be non-negative")
    return max(q + disc_count - budget, 0.0)


def safety_queue_trace(z0, violations: np.ndarray, epsilon) -> np.ndarray:
    """Queue value after every tick along the last axis (reflected random walk).

    Uses the closed form ``Z_n = max(z0 + S_n, S_n - min_{j<=n} S_j)`` with
    ``S_0 = 0``; ``z0`` and ``epsilon`` broadcast over the leading axes.
    """
    x = np.asarray(violations, dtype=float) - np.asarray(epsilon, dtype=float)[..., None]
    s = np.cumsum(x, axis=-1)
    running_min = np.minimum(np.minimum.accumulate(s, axis=-1), 0.0)
    return np.maximum(np.asarray(z0, dtype=float)[..., None] + s, s - running_min)


def slot_violation_count(tick_ages, n_safe: int, ticks_per_slot: int | None = None) -> int:
    ages = np.asarray(tick_ages)
    if ticks_per_slot is not None and ages.shape[-1] != ticks_per_slot:
        raise ValueError(f"expected {ticks_per_slot} tick ages, got {ages.shape[-1]}")
    return int(np.count_nonzero(ages > n_safe))


@dataclass
class VirtualQueueSet:
    """Safety queues per (vehicle, class) plus the shared power and
    discretionary-handover queues."""

    z: np.ndarray
    q_power: float = 0.0
    q_handover: float = 0.0

    @classmethod
    def zeros(cls, vehicles: int, classes: int) -> "VirtualQueueSet":
        return cls(np.zeros((vehicles, classes)))

    def copy(self) -> "VirtualQueueSet":
        return VirtualQueueSet(self.z.copy(), self.q_power, self.q_handover)


@dataclass(frozen=True)
class ComplianceReport:
    violation_rate: tuple[float, ...]
    budget: tuple[float, ...]
    compliant: tuple[bool, ...]
    z_over_time_slope: tuple[float, ...]
    per_vehicle_rate: np.ndarray = field(repr=False, compare=False)

    def records(self) -> list[dict]:
        return [
            {"class": m + 1, "rate": r, "epsilon": e, "compliant": c, "z_slope": s}
            for m, (r, e, c, s) in enumerate(zip(self.violation_rate, self.budget,
                                                 self.compliant, self.z_over_time_slope))
        ]


def trailing_slope(series: np.ndarray) -> float:
    """Least-squares slope per index over the trailing half of ``series``."""
    y = np.asarray(series, dtype=float)
    y = y[y.size // 2:]
    if y.size < 2:
        return 0.0
    x = np.arange(y.size, dtype=float)
    return float(np.polyfit(x, y, 1)[0])


def compliance_report(ages: np.ndarray, thresholds: SafetyThresholds,
                      z_mean_trace: np.ndarray | None = None) -> ComplianceReport:
    """Tick-fraction violation rates against each class budget.

    ``ages`` has shape ``(ticks, vehicles, classes)``; a 2-D array is read as
    a single vehicle. ``z_mean_trace`` (``(ticks, classes)``, vehicle-mean
    safety queue) is rebuilt from the ages when omitted.
    """
    ages = np.asarray(ages)
    if ages.ndim == 2:
        ages = ages[:, None, :]
    if ages.shape[0] == 0:
        raise ValueError("empty tick log")
    n_safe = np.asarray(thresholds.n_safe)
    eps = np.asarray(thresholds.epsilon)
    viol = ages > n_safe
    per_vehicle = viol.mean(axis=0)
    rates = viol.mean(axis=(0, 1))
    if z_mean_trace is None:
        traces = safety_queue_trace(np.zeros(viol.shape[1:]), np.moveaxis(viol, 0, -1), eps[None, :])
        z_mean_trace = traces.mean(axis=0).T
    slopes = tuple(trailing_slope(z_mean_trace[:, m]) for m in range(len(eps)))
    return ComplianceReport(
        tuple(float(r) for r in rates),
        tuple(float(e) for e in eps),
        tuple(bool(r <= e) for r, e in zip(rates, eps)),
        slopes,
        per_vehicle,
    )


def slater_check(forced_rate: float, mu_n: float, ticks_per_slot: int, epsilon: float,
                 delta: float = 0.005) -> bool:
    """True when forced handovers leave enough slack under the class budget."""
    if mu_n <= 0:
        raise ValueError("mean outage ticks must be positive")
    if not 0 < delta < epsilon:
        raise ValueError("slack must satisfy 0 < delta < epsilon")
    return forced_rate <= (epsilon - delta) * ticks_per_slot / mu_n
