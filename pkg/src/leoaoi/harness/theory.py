"""Table of closed-form results checked against independent oracles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..analysis import (brute_force_tick_oracle, exact_handover_increment,
                        refined_increment_bound, reactive_infeasibility_check,
                        simulate_handover_increments, spike_envelope)
from .config import ScenarioConfig
from .pingpong import MAX_INJECTED, inject_pingpong


@dataclass(frozen=True)
class Check:
    name: str
    params: str
    expected: float
    measured: float
    ok: bool


def _spike_checks() -> list[Check]:
    out = []
    for n in (20, 50, 100):
        for k in range(1, MAX_INJECTED + 1):
            for a0 in range(1, 11):
                env = spike_envelope(a0, k, n)
                ages = brute_force_tick_oracle(a0, [False] * (k * n))
                cum = sum(ages[n - 1::n])
                ok = env.end_age == ages[-1] and env.cumulative == cum
                out.append(Check("spike_envelope", f"a0={a0} k={k} N={n}",
                                 env.cumulative, cum, ok))
    return out


def _injection_checks(cfg: ScenarioConfig) -> list[Check]:
    n = cfg.timescale.ticks_per_slot
    out = []
    for k in range(1, MAX_INJECTED + 1):
        trace = inject_pingpong(cfg, k, 1)
        env = spike_envelope(1, k, n)
        ok = trace.end_age == env.end_age and trace.cumulative == env.cumulative
        ok = ok and (len(trace.events) == (1 if k >= 2 else 0))
        out.append(Check("inject_pingpong", f"k={k} a0=1 N={n}", env.cumulative,
                         trace.cumulative, ok))
    return out


def _bound_checks(slots: int, seed: int) -> list[Check]:
    rng = np.random.default_rng(seed)
    n_ho, n = 11, 50
    out = []
    # the bound needs a0 >= N - 2*n_ho; check a stale age and the edge itself
    for a0 in (n + 1, n - 2 * n_ho):
        for p in (0.0, 0.05, 0.2, 0.5, 1.0):
            bound = refined_increment_bound(n_ho, n, p)
            exact = exact_handover_increment(a0, n_ho, n, p)
            sample = simulate_handover_increments(a0, n_ho, n, p, slots, rng)
            se = sample.std(ddof=1) / np.sqrt(slots) if sample.std() > 0 else 0.0
            mc = float(sample.mean())
            ok = bool(mc <= bound + 3 * se + 1e-12 and abs(mc - exact) <= 3 * se + 1e-9)
            out.append(Check("refined_bound", f"a0={a0} p={p}", bound, mc, ok))
    return out


def _infeasibility_checks() -> list[Check]:
    out = []
    for n_ho, expect in ((4, False), (5, True), (11, True)):
        got = reactive_infeasibility_check(n_ho, 5)
        out.append(Check("reactive_infeasible", f"n_ho={n_ho} n_safe=5", float(expect),
                         float(got), got == expect))
    return out


def theory_checks(cfg: ScenarioConfig | None = None, slots: int = 100_000,
                  seed: int = 0) -> list[Check]:
    cfg = cfg or ScenarioConfig()
    return (_spike_checks() + _injection_checks(cfg) + _bound_checks(slots, seed)
            + _infeasibility_checks())
