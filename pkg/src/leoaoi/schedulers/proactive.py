"""Look-ahead handover timing driven by predicted visibility windows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import NO_SATELLITE, HandoverKind, PolicyConfig


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def segment_expected_age(e0, q, length: int) -> tuple[np.ndarray, np.ndarray]:
    """End value and tick-mean of ``E_{n+1} = 1 + (1-q) E_n`` over ``length`` ticks."""
    e0 = np.asarray(e0, dtype=float)
    q = np.asarray(q, dtype=float)
    if length == 0:
        return e0 + 0 * q, np.zeros(np.broadcast(e0, q).shape)
    r = 1.0 - q
    safe = np.where(q > 0, q, 1.0)
    decay = r**length
    end = np.where(q > 0, 1.0 / safe + decay * (e0 - 1.0 / safe), e0 + length)
    mean = np.where(q > 0, 1.0 / safe + (e0 - 1.0 / safe) * r * (1.0 - decay) / (safe * length),
                    e0 + (length + 1) / 2.0)
    return end, mean


@dataclass(frozen=True)
class ProactiveDecision:
    """Planned handover: wait ``horizon`` slots, then move to ``target``.

    A horizon of ``horizon_cap + 1`` means no handover is planned inside the
    look-ahead.
    """

    horizon: int
    target: int
    kind: HandoverKind
    cost: float


@dataclass(frozen=True)
class CostGrid:
    horizon: np.ndarray
    target: np.ndarray
    lookahead: np.ndarray
    safety: np.ndarray

    @property
    def cost(self) -> np.ndarray:
        return self.lookahead + self.safety


def _segment_total(e0: np.ndarray, q: np.ndarray, length: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """End value and tick-sum of the expected-age recursion, elementwise lengths."""
    r = 1.0 - q
    safe = np.where(q > 0, q, 1.0)
    decay = r**length
    end = np.where(q > 0, 1.0 / safe + decay * (e0 - 1.0 / safe), e0 + length)
    total = np.where(q > 0, length / safe + (e0 - 1.0 / safe) * r * (1.0 - decay) / safe,
                     length * e0 + length * (length + 1) / 2.0)
    return end, total


def _plan_mean_age(age: float, slot_q: np.ndarray, slot_out: np.ndarray, ticks: int) -> np.ndarray:
    """Mean expected age over every tick of a multi-slot plan, per option (rows)."""
    e = np.full(slot_q.shape[0], float(age))
    total = np.zeros(slot_q.shape[0])
    for j in range(slot_q.shape[1]):
        outs = slot_out[:, j].astype(float)
        total += outs * e + outs * (outs + 1) / 2.0
        e, part = _segment_total(e + outs, slot_q[:, j], ticks - outs)
        total += part
    return total / (slot_q.shape[1] * ticks)


def proactive_cost_grid(age: float, z1: float, current: int, current_window: int,
                        q_current: float, candidates: Sequence[int], windows: Sequence[int],
                        q: Sequence[float], cfg: PolicyConfig, ticks_per_slot: int,
                        outage_ticks: int, mu_n: float, epsilon1: float) -> CostGrid:
    """Cost of every (horizon, target) plan plus the stay-through plan."""
    cands = np.asarray(candidates, dtype=np.int64)
    wins = np.asarray(windows, dtype=np.int64)
    qs = np.asarray(q, dtype=float)
    f = cfg.horizon_cap
    slots = f + 1
    serving = current >= 0 and current_window > 0
    w_cur = current_window if serving else 0

    rows_h, rows_k, rows_q, rows_o, rows_num = [], [], [], [], []
    for i, k in enumerate(cands):
        others = np.delete(qs, i)
        q_alt = float(others.max()) if others.size else 0.0
        for h in range(0, min(f, int(wins[i]) - 1, w_cur) + 1):
            sq = np.empty(slots)
            so = np.zeros(slots, dtype=np.int64)
            sq[:h] = q_current
            sq[h:] = qs[i]
            so[h] = outage_ticks
            if wins[i] <= f:
                sq[wins[i]:] = q_alt
                so[wins[i]] = outage_ticks
            rows_h.append(h)
            rows_k.append(int(k))
            rows_q.append(sq)
            rows_o.append(so)
            rows_num.append(z1 + mu_n - h * ticks_per_slot * epsilon1)
    if serving and (w_cur > f or cands.size == 0):
        rows_h.append(f + 1)
        rows_k.append(int(current))
        rows_q.append(np.full(slots, q_current))
        rows_o.append(np.zeros(slots, dtype=np.int64))
        rows_num.append(z1 - slots * ticks_per_slot * epsilon1)
    if not rows_h:
        empty = np.zeros(0)
        return CostGrid(empty.astype(np.int64), empty.astype(np.int64), empty, empty)
    look = _plan_mean_age(age, np.array(rows_q), np.array(rows_o), ticks_per_slot)
    safety = cfg.kappa_safe * sigmoid(np.array(rows_num) / cfg.z_scale)
    return CostGrid(np.array(rows_h), np.array(rows_k), look, safety)


def proactive_ho_search(age: float, z1: float, current: int, current_window: int,
                        q_current: float, candidates: Sequence[int], windows: Sequence[int],
                        q: Sequence[float], cfg: PolicyConfig, ticks_per_slot: int,
                        outage_ticks: int, mu_n: float, epsilon1: float,
                        sat_ids: np.ndarray | None = None) -> ProactiveDecision:
    """Cheapest (horizon, target) plan; ties go to the smaller horizon, then
    the smaller satellite id.

    ``current`` is ``NO_SATELLITE`` (or ``current_window`` is 0) when the
    serving link is already lost, which forces an immediate handover.
    """
    grid = proactive_cost_grid(age, z1, current, current_window, q_current, candidates,
                               windows, q, cfg, ticks_per_slot, outage_ticks, mu_n, epsilon1)
    if grid.horizon.size == 0:
        return ProactiveDecision(0, NO_SATELLITE, HandoverKind.FORCED, math.inf)
    ids = grid.target if sat_ids is None else np.asarray(sat_ids)[grid.target]
    best = int(np.lexsort((ids, grid.horizon, grid.cost))[0])
    h, k = int(grid.horizon[best]), int(grid.target[best])
    if k == current:
        kind = HandoverKind.NONE
    elif current < 0 or current_window <= 0 or h >= current_window:
        kind = HandoverKind.FORCED
    else:
        kind = HandoverKind.DISCRETIONARY
    return ProactiveDecision(h, k, kind, float(grid.cost[best]))
