"""Per-slot drift-plus-penalty controller.

Each vehicle scores every (satellite, transmit-flag pattern, power) candidate
by the one-slot drift-plus-penalty bound and takes the minimizer. Expected
violation counts and expected ages are computed exactly at tick resolution
for a given per-tick success probability, which keeps the controller
sensitive to power even when the slot summary would be flat.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .base import (NO_SATELLITE, Action, HandoverKind, LinkModel, PolicyConfig,
                   SlotObservation, flag_patterns)
from .beam import mrt_rate
from .proactive import proactive_ho_search


def _geometric_sums(q: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``(1 - (1-q)**m) / q`` with the ``q -> 0`` limit ``m``."""
    q = np.asarray(q, dtype=float)
    safe = np.where(q > 0, q, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = -np.expm1(m * np.log1p(-np.minimum(q, 1.0))) / safe
    return np.where(q > 0, val, m)


def expected_ages(a0, q, n_out, ticks: int) -> np.ndarray:
    """Expected age after each of ``ticks`` ticks (last axis).

    The first ``n_out`` ticks are outage ticks; every later tick succeeds
    independently with probability ``q``. ``a0``, ``q`` and ``n_out``
    broadcast together.
    """
    a0, q, n_out = np.broadcast_arrays(np.asarray(a0, dtype=float),
                                       np.asarray(q, dtype=float),
                                       np.asarray(n_out, dtype=np.int64))
    a0, q, n_out = a0[..., None], q[..., None], n_out[..., None]
    n = np.arange(1, ticks + 1)
    after = np.maximum(n - n_out, 0)
    start = a0 + np.minimum(n, n_out)
    e1 = a0 + n_out
    r_pow = np.where(after > 0, (1.0 - q) ** after, 1.0)
    attempt = e1 * r_pow + _geometric_sums(q, after)
    return np.where(after > 0, attempt, start)


def expected_violations(a0, q, n_out, ticks: int, n_safe) -> np.ndarray:
    """Expected number of ticks whose age exceeds ``n_safe``.

    The age exceeds ``s`` at tick ``n`` exactly when ``a0 + n > s`` and no
    attempt in the trailing ``s`` ticks succeeded. ``n_safe`` broadcasts
    with the other arguments.
    """
    a0, q, n_out, n_safe = np.broadcast_arrays(np.asarray(a0, dtype=float),
                                               np.asarray(q, dtype=float),
                                               np.asarray(n_out, dtype=np.int64),
                                               np.asarray(n_safe, dtype=np.int64))
    a0, q, n_out, n_safe = a0[..., None], q[..., None], n_out[..., None], n_safe[..., None]
    n = np.arange(1, ticks + 1)
    attempts = np.clip(np.minimum(n_safe, n - n_out), 0, None)
    prob = np.where(a0 + n > n_safe, (1.0 - q) ** attempts, 0.0)
    return prob.sum(axis=-1)


@dataclass(frozen=True)
class CandidateTable:
    """Flattened candidate set with scores, in enumeration order."""

    satellite: np.ndarray
    pattern: np.ndarray
    power: np.ndarray
    handover: np.ndarray
    discretionary: np.ndarray
    score: np.ndarray
    flags: np.ndarray

    def order(self, sat_ids: np.ndarray) -> np.ndarray:
        """Indices sorted by score, then no-handover, power, satellite id, pattern."""
        return np.lexsort((self.pattern, sat_ids[self.satellite], self.power,
                           self.handover.astype(int), self.score))


def score_candidates(ages: Sequence[float], z: Sequence[float], q_power: float,
                     q_handover: float, current: int, current_serviceable: bool,
                     satellites: Sequence[int], gain: np.ndarray, interference: np.ndarray,
                     link: LinkModel, cfg: PolicyConfig) -> CandidateTable:
    """Score every candidate of one vehicle.

    ``gain`` and ``interference`` are indexed by local satellite index.
    """
    sats = np.asarray(satellites, dtype=np.int64)
    grid = np.asarray(cfg.power_grid, dtype=float)
    patterns = flag_patterns(link.classes)
    n = link.ticks_per_slot
    handover = sats != current
    discretionary = handover & bool(current_serviceable) & (current >= 0)
    n_out = np.where(handover, link.outage_ticks, 0)

    sig = gain[sats] * link.beam_gain
    sinr = grid[None, :] * sig[:, None] / (link.noise_power + interference[sats][:, None])
    q = link.pool.success_probability(sinr)
    rate = mrt_rate(sig[:, None] * link.mean_fading, grid[None, :], link.noise_power)

    a0 = np.asarray(ages, dtype=float)[:, None, None]
    zs = np.asarray(z, dtype=float)
    safe_ticks = np.asarray(link.n_safe)[:, None, None]
    weights = np.asarray(link.weights, dtype=float)
    base = (-n * zs * np.asarray(link.epsilon, dtype=float))[:, None]
    v_on = expected_violations(a0, q[None], n_out[None, :, None], n, safe_ticks)
    t_on = expected_ages(a0, q[None], n_out[None, :, None], n).mean(axis=-1)
    v_off = expected_violations(a0[..., 0], 0.0, n_out[None, :], n, safe_ticks[..., 0])
    t_off = expected_ages(a0[..., 0], 0.0, n_out[None, :], n).mean(axis=-1)
    on = zs[:, None, None] * v_on + base[..., None] + cfg.V * weights[:, None, None] * t_on
    off = zs[:, None] * v_off + base + cfg.V * weights[:, None] * t_off

    ho_w = np.where(handover, link.p_ho, 0.0)
    queue_common = (q_handover * (discretionary.astype(float) - link.ho_budget / link.n_vehicles)
                    - q_power * link.reference_power)

    rows_sat, rows_pat, rows_pow, rows_score = [], [], [], []
    # silent candidate per satellite
    silent = off.sum(axis=0) + q_power * ho_w + queue_common
    rows_sat.append(np.arange(sats.size))
    rows_pat.append(np.zeros(sats.size, dtype=np.int64))
    rows_pow.append(np.zeros(sats.size))
    rows_score.append(silent)
    need = patterns.astype(float) @ np.asarray(link.rate_min, dtype=float)
    for pat in range(1, patterns.shape[0]):
        fl = patterns[pat]
        cls = np.where(fl[:, None, None], on, off[:, :, None]).sum(axis=0)
        total = cls + q_power * (grid[None, :] + ho_w[:, None]) + queue_common[:, None]
        ok = rate >= need[pat] - 1e-12
        si, pi = np.nonzero(ok)
        rows_sat.append(si)
        rows_pat.append(np.full(si.size, pat, dtype=np.int64))
        rows_pow.append(grid[pi])
        rows_score.append(total[si, pi])
    idx = np.concatenate(rows_sat)
    pat = np.concatenate(rows_pat)
    return CandidateTable(
        satellite=sats[idx],
        pattern=pat,
        power=np.concatenate(rows_pow),
        handover=handover[idx],
        discretionary=discretionary[idx],
        score=np.concatenate(rows_score),
        flags=patterns[pat],
    )


def dpp_decide(ages: Sequence[float], z: Sequence[float], q_power: float, q_handover: float,
               current: int, current_serviceable: bool, satellites: Sequence[int],
               gain: np.ndarray, interference: np.ndarray, link: LinkModel,
               cfg: PolicyConfig, sat_ids: np.ndarray | None = None) -> Action:
    """Minimizer of the drift-plus-penalty score over one vehicle's candidates.

    An empty candidate set yields an idle action with no serving satellite.
    """
    if len(satellites) == 0:
        return Action(NO_SATELLITE, (False,) * link.classes, 0.0)
    table = score_candidates(ages, z, q_power, q_handover, current, current_serviceable,
                             satellites, gain, interference, link, cfg)
    ids = np.arange(gain.shape[0]) if sat_ids is None else np.asarray(sat_ids)
    best = int(table.order(ids)[0])
    sat = int(table.satellite[best])
    kind = HandoverKind.NONE
    if table.handover[best]:
        kind = HandoverKind.DISCRETIONARY if table.discretionary[best] else HandoverKind.FORCED
    return Action(sat, tuple(bool(f) for f in table.flags[best]), float(table.power[best]),
                  0, kind)


class DppPolicy:
    """Drift-plus-penalty controller, optionally gated by proactive timing."""

    def __init__(self, cfg: PolicyConfig, name: str = "dpp"):
        self.cfg = cfg
        self.name = name
        self.link: LinkModel | None = None
        self._last: list[Action | None] | None = None

    def reset(self, link: LinkModel) -> None:
        self.link = link
        self._last: list[Action | None] | None = None

    def _success(self, gain: np.ndarray, interference: np.ndarray, power: float) -> np.ndarray:
        link = self.link
        sinr = power * gain * link.beam_gain / (link.noise_power + interference)
        return link.pool.success_probability(sinr)

    def candidate_set(self, obs: SlotObservation, v: int, interference: np.ndarray) -> tuple[list[int], int]:
        """Satellites offered to the scorer and the planned handover horizon."""
        link, cfg = self.link, self.cfg
        serviceable = np.flatnonzero(obs.serviceable[v])
        cur = int(obs.serving[v])
        cur_ok = cur >= 0 and bool(obs.serviceable[v, cur])
        if serviceable.size == 0:
            return [], 0
        if not cfg.proactive:
            return serviceable.tolist(), 0
        q_ref = self._success(obs.gain[v], interference, link.reference_power)
        others = serviceable[serviceable != cur]
        mu_n = cfg.mu_n if cfg.mu_n is not None else link.mean_outage_ticks
        decision = proactive_ho_search(
            age=float(obs.ages[v, 0]), z1=float(obs.z[v, 0]), current=cur if cur_ok else NO_SATELLITE,
            current_window=int(obs.windows[v, cur]) if cur_ok else 0,
            q_current=float(q_ref[cur]) if cur_ok else 0.0,
            candidates=others, windows=obs.windows[v, others], q=q_ref[others], cfg=cfg,
            ticks_per_slot=link.ticks_per_slot, outage_ticks=link.outage_ticks, mu_n=mu_n,
            epsilon1=link.epsilon[0], sat_ids=obs.sat_ids)
        if not cur_ok:
            return [decision.target], 0
        if decision.horizon == 0 and decision.target != cur:
            return [cur, decision.target], 0
        return [cur], decision.horizon

    def decide(self, obs: SlotObservation) -> list[Action]:
        """Decide vehicles in index order.

        Interference comes from the previous slot, except that a vehicle
        changing association also sees where earlier vehicles moved in this
        slot, so simultaneous handovers do not pile onto one satellite.
        """
        link = self.link
        n_veh = obs.serving.shape[0]
        interference = obs.interference.copy()
        initial = obs.t == 0 and bool(np.all(obs.serving == NO_SATELLITE))
        if self._last is None or len(self._last) != n_veh:
            self._last = [None] * n_veh
        actions = []
        for v in range(n_veh):
            sats, horizon = self.candidate_set(obs, v, interference[v])
            cur = int(obs.serving[v])
            cur_ok = cur >= 0 and bool(obs.serviceable[v, cur])
            act = dpp_decide(obs.ages[v], obs.z[v], obs.q_power, obs.q_handover, cur, cur_ok,
                             sats, obs.gain[v], interference[v], link, self.cfg, obs.sat_ids)
            if initial:
                act = Action(act.serving_satellite, act.priority_flags, act.power, 0,
                             HandoverKind.NONE)
            elif horizon:
                act = Action(act.serving_satellite, act.priority_flags, act.power, horizon,
                             act.handover_kind)
            if act.serving_satellite != cur:
                prev = self._last[v]
                if prev is not None and prev.transmits and prev.serving_satellite == cur:
                    interference -= _emission(obs.gain, prev, v, link)
                if act.transmits:
                    interference += _emission(obs.gain, act, v, link)
                np.maximum(interference, 0.0, out=interference)
            self._last[v] = act
            actions.append(act)
        return actions


def _emission(gain: np.ndarray, act: Action, v: int, link: LinkModel) -> np.ndarray:
    """Mean interference that vehicle ``v``'s transmission adds at every satellite,
    as seen by the other vehicles (zero row for ``v`` itself)."""
    antenna = np.full(gain.shape[1], link.sidelobe_gain)
    antenna[act.serving_satellite] = link.beam_gain
    add = np.zeros_like(gain)
    add[:] = act.power * gain[v] * antenna * link.mean_fading
    add[v] = 0.0
    return add
