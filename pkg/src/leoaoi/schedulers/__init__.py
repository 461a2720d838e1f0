"""Scheduling policies: drift-plus-penalty control, proactive timing, baselines."""

from dataclasses import replace

from .base import (NO_SATELLITE, Action, HandoverKind, LinkModel, ObservedState, Policy,
                   PolicyConfig, SlotObservation, flag_patterns, log_power_grid)
from .baselines import (GreedyRssPolicy, MaxVisibleTimePolicy, RoundRobinPolicy,
                        greedy_mrss_policy, mvt_policy, round_robin_grant, round_robin_policy)
from .beam import MrtBeam, beam_rate, mrt_beamformer, mrt_rate
from .dpp import DppPolicy, dpp_decide, expected_ages, expected_violations, score_candidates
from .proactive import ProactiveDecision, proactive_cost_grid, proactive_ho_search, sigmoid

POLICY_NAMES = ("dpp", "rr", "mvt", "mrss")


def make_policy(name: str, cfg: PolicyConfig | None = None) -> Policy:
    """Policy instance by short name."""
    if name == "dpp":
        return DppPolicy(cfg or PolicyConfig())
    if name == "dpp-reactive":
        base = cfg or PolicyConfig()
        return DppPolicy(replace(base, proactive=False), name)
    if name == "rr":
        return RoundRobinPolicy()
    if name == "mvt":
        return MaxVisibleTimePolicy()
    if name == "mrss":
        return GreedyRssPolicy()
    raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES + ('dpp-reactive',)}")


__all__ = [
    "NO_SATELLITE", "Action", "HandoverKind", "LinkModel", "ObservedState", "Policy",
    "PolicyConfig", "SlotObservation", "flag_patterns", "log_power_grid",
    "GreedyRssPolicy", "MaxVisibleTimePolicy", "RoundRobinPolicy", "greedy_mrss_policy",
    "mvt_policy", "round_robin_grant", "round_robin_policy", "MrtBeam", "beam_rate",
    "mrt_beamformer", "mrt_rate", "DppPolicy", "dpp_decide", "expected_ages",
    "expected_violations", "score_candidates", "ProactiveDecision", "proactive_cost_grid",
    "proactive_ho_search", "sigmoid", "POLICY_NAMES", "make_policy",
]
