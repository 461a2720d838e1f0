"""Non-adaptive reference policies: round robin, maximum visible time, greedy RSS."""

from __future__ import annotations

import numpy as np

from .base import NO_SATELLITE, Action, HandoverKind, LinkModel, SlotObservation, handover_kind


def round_robin_grant(t: int, vehicles: int, classes: int) -> tuple[int, int]:
    """(vehicle, class) granted in slot ``t``; the pattern repeats every
    ``vehicles * classes`` slots."""
    return divmod(t % (vehicles * classes), classes)


def _pick(scores: np.ndarray, mask: np.ndarray) -> int:
    """Index of the largest masked score; ties go to the lowest index."""
    if not mask.any():
        return NO_SATELLITE
    masked = np.where(mask, scores, -np.inf)
    return int(np.argmax(masked))


def _stay_or(current: int, serviceable: np.ndarray, scores: np.ndarray) -> int:
    if current >= 0 and serviceable[current]:
        return current
    return _pick(scores, serviceable)


class _Baseline:
    name = "baseline"

    def __init__(self) -> None:
        self.link: LinkModel | None = None

    def reset(self, link: LinkModel) -> None:
        self.link = link

    def _action(self, obs: SlotObservation, v: int, sat: int, flags: tuple[bool, ...]) -> Action:
        cur = int(obs.serving[v])
        cur_ok = cur >= 0 and bool(obs.serviceable[v, cur])
        initial = obs.t == 0 and cur < 0
        kind = HandoverKind.NONE if initial else handover_kind(cur, sat, cur_ok)
        power = self.link.p_max if any(flags) and sat >= 0 else 0.0
        return Action(sat, flags, power, 0, kind)


class RoundRobinPolicy(_Baseline):
    """One (vehicle, class) grant per slot at full power; association stays
    until forced, then moves to the strongest mean link."""

    name = "rr"

    def decide(self, obs: SlotObservation) -> list[Action]:
        n_veh, classes = obs.ages.shape
        gv, gm = round_robin_grant(obs.t, n_veh, classes)
        out = []
        for v in range(n_veh):
            sat = _stay_or(int(obs.serving[v]), obs.serviceable[v], obs.gain[v])
            flags = tuple(v == gv and m == gm for m in range(classes))
            out.append(self._action(obs, v, sat, flags))
        return out


class MaxVisibleTimePolicy(_Baseline):
    """Stay until forced, then take the satellite with the longest remaining window."""

    name = "mvt"

    def decide(self, obs: SlotObservation) -> list[Action]:
        n_veh, classes = obs.ages.shape
        out = []
        for v in range(n_veh):
            sat = _stay_or(int(obs.serving[v]), obs.serviceable[v], obs.windows[v].astype(float))
            out.append(self._action(obs, v, sat, (True,) * classes))
        return out


class GreedyRssPolicy(_Baseline):
    """Associate every slot with the strongest instantaneous received signal."""

    name = "mrss"

    def decide(self, obs: SlotObservation) -> list[Action]:
        n_veh, classes = obs.ages.shape
        out = []
        for v in range(n_veh):
            sat = _pick(obs.measured_gain[v], obs.serviceable[v])
            out.append(self._action(obs, v, sat, (True,) * classes))
        return out


def round_robin_policy() -> RoundRobinPolicy:
    return RoundRobinPolicy()


def mvt_policy() -> MaxVisibleTimePolicy:
    return MaxVisibleTimePolicy()


def greedy_mrss_policy() -> GreedyRssPolicy:
    return GreedyRssPolicy()
