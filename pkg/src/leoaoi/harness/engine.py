"""Episode simulation: geometry, per-slot decisions and per-tick link outcomes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..aoi import (PhaseDecomposition, age_trajectory, outage_ticks, phase_decomposition,
                   v2v_delay_ticks, validate_tick_rule)
from ..analysis import PingPongEvent, detect_pingpong
from ..channel import FadingPool, path_loss_db, sample_shadowed_rician
from ..constellation import (elevation_range_grid, ephemeris_table, forward_run_lengths,
                             highway_vehicle, satellite_positions, vehicle_track, walker_delta)
from ..safety import (compliance_report, safety_queue_trace, update_ho_queue,
                      update_power_queue)
from ..schedulers import NO_SATELLITE, LinkModel, Policy, SlotObservation, make_policy
from ..schedulers.beam import mrt_rate
from .config import ScenarioConfig

STREAMS = ("geometry", "fading", "outage", "measurement", "shadowing", "prediction")


def episode_streams(seed: int | np.random.SeedSequence) -> dict[str, np.random.Generator]:
    """Independent named generators, identical for every policy given one seed."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return {name: np.random.default_rng(child) for name, child in zip(STREAMS, ss.spawn(len(STREAMS)))}


@dataclass
class EpisodeGeometry:
    """Per-slot link geometry over the episode plus the window look-ahead.

    Satellite axes cover only satellites seen by some vehicle during the
    episode; ``sat_ids`` maps them back to constellation ids.
    """

    sat_ids: np.ndarray
    elevation: np.ndarray
    slant_range: np.ndarray
    visible: np.ndarray
    serviceable: np.ndarray
    windows: np.ndarray
    censored: np.ndarray
    gain: np.ndarray
    shadow_db: np.ndarray
    vehicle_speed: np.ndarray
    satellite_speed: float
    start_time_s: float

    @property
    def n_vehicles(self) -> int:
        return int(self.elevation.shape[1])


def _elevation_table(cfg: ScenarioConfig, table, times: np.ndarray, veh_pos: np.ndarray,
                     chunk: int = 64) -> tuple[np.ndarray, np.ndarray]:
    elev = np.empty((times.size, veh_pos.shape[1], len(table)), dtype=float)
    rng = np.empty_like(elev)
    for lo in range(0, times.size, chunk):
        hi = min(lo + chunk, times.size)
        sat = satellite_positions(table, cfg.constellation, times[lo:hi])
        elev[lo:hi], rng[lo:hi] = elevation_range_grid(sat, veh_pos[lo:hi])
    return elev, rng


def build_geometry(cfg: ScenarioConfig, geo_rng: np.random.Generator,
                   shadow_rng: np.random.Generator, slots: int) -> EpisodeGeometry:
    cc, pc, ch = cfg.constellation, cfg.platoon, cfg.channel
    slot_s = cfg.timescale.slot_seconds
    cap = cfg.handover.window_cap
    steps = slots + cap + 1

    start = geo_rng.uniform(0.0, cc.orbital_period)
    speeds = geo_rng.uniform(pc.speed_kmh[0], pc.speed_kmh[1], size=pc.platoons) / 3.6
    period = int(round(cfg.handover.period_s / slot_s)) if cfg.handover.period_s > 0 else 0
    phases_all = geo_rng.integers(0, max(period, 1), size=cc.total_satellites)

    lat, lon, az = (math.radians(pc.latitude_deg), math.radians(pc.longitude_deg),
                    math.radians(pc.azimuth_deg))
    rel_times = np.arange(steps) * slot_s
    veh_pos = np.stack([
        vehicle_track(highway_vehicle(j, lat, lon, az, float(speeds[j]), j * pc.spacing_m,
                                      cc.earth_radius), rel_times)
        for j in range(pc.platoons)], axis=1)

    table = ephemeris_table(walker_delta(cc))
    elev, rng = _elevation_table(cfg, table, start + rel_times, veh_pos)
    visible_all = elev >= cc.min_elevation
    ids = np.flatnonzero(visible_all.any(axis=(0, 1)))
    elev, rng, visible = elev[:, :, ids], rng[:, :, ids], visible_all[:, :, ids]

    rising = visible.copy()
    rising[1:] &= ~visible[:-1]
    draws = shadow_rng.standard_normal(visible.shape) * ch.shadow_fading_sigma
    step_idx = np.arange(steps)[:, None, None]
    last_rise = np.maximum.accumulate(np.where(rising, step_idx, 0), axis=0)
    shadow = np.take_along_axis(draws, last_rise, axis=0)

    above = elev > 1e-3
    loss = np.full(elev.shape, np.inf)
    loss[above] = path_loss_db(rng[above], elev[above], ch.carrier_frequency, ch.zenith_loss,
                               shadow[above])
    gain = ch.sat_gain * 10.0 ** (-loss / 10.0)

    if period > 1:
        phases = phases_all[ids]
        in_transition = (np.arange(steps)[:, None] + phases[None, :]) % period == 0
        serviceable = visible & ~in_transition[:, None, :]
    else:
        serviceable = visible
    windows, censored = forward_run_lengths(serviceable, cap)
    return EpisodeGeometry(ids, elev, rng, visible, serviceable, windows, censored, gain, shadow,
                           speeds, cc.orbital_speed, float(start))


def link_model(cfg: ScenarioConfig, pool_rng: np.random.Generator, n_vehicles: int) -> LinkModel:
    ts, ch = cfg.timescale, cfg.channel
    thr = cfg.thresholds
    out = cfg.handover.outage
    mean_ticks = out.mean_ms / 1000.0 / ts.tick_seconds
    n_hat = min(max(int(math.floor(mean_ticks + 1e-9)), 0), ts.ticks_per_slot)
    return LinkModel(
        noise_power=ch.noise_power,
        p_max=cfg.power.p_max_w,
        p_ho=cfg.handover.p_ho_w,
        n_vehicles=n_vehicles,
        ticks_per_slot=ts.ticks_per_slot,
        n_safe=thr.n_safe,
        epsilon=thr.epsilon,
        weights=thr.weights,
        outage_ticks=n_hat,
        mean_outage_ticks=mean_ticks,
        ho_budget=cfg.handover.budget,
        rate_min=cfg.power.rate_min,
        beam_gain=ch.beam_gain,
        sidelobe_gain=ch.sidelobe_factor,
        mean_fading=ch.mean_fading_power,
        pool=FadingPool(ch, pool_rng, cfg.pool_size),
    )


@dataclass
class RunResult:
    policy: str
    seed: int
    mean_aoi: tuple[float, ...]
    violation_rate: tuple[float, ...]
    epsilon: tuple[float, ...]
    n_safe: tuple[int, ...]
    weights: tuple[float, ...]
    compliant: tuple[bool, ...]
    mean_power_w: float
    forced_ho: int
    disc_ho: int
    pingpong: list[PingPongEvent]
    phase: tuple[PhaseDecomposition, ...]
    follower_e2e: dict[float, tuple[float, ...]]
    z_slope: tuple[float, ...]
    rate_violations: int
    queue_trace: dict[str, np.ndarray] = field(repr=False)
    ages: np.ndarray = field(repr=False)
    in_handover: np.ndarray = field(repr=False)
    serving: np.ndarray = field(repr=False)
    handover: np.ndarray = field(repr=False)
    forced: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)

    @property
    def pingpong_events(self) -> int:
        return len(self.pingpong)

    @property
    def weighted_aoi(self) -> float:
        return float(np.dot(self.weights, self.mean_aoi))

    def recomputed_violation_rate(self) -> tuple[float, ...]:
        viol = self.ages > np.asarray(self.n_safe)[None, None, :]
        return tuple(float(x) for x in viol.mean(axis=(0, 1)))


def _interference_matrix(power: np.ndarray, gain_t: np.ndarray, serving: np.ndarray,
                         link: LinkModel) -> np.ndarray:
    """``C[v, u]``: mean interference at ``v``'s satellite per active tick of ``u``."""
    n = serving.size
    out = np.zeros((n, n))
    for v in range(n):
        k = serving[v]
        if k < 0:
            continue
        same = serving == k
        antenna = np.where(same, link.beam_gain, link.sidelobe_gain)
        out[v] = power * gain_t[:, k] * antenna * link.mean_fading
        out[v, v] = 0.0
    return out


def _emissions(power: np.ndarray, active_frac: np.ndarray, gain_t: np.ndarray,
               serving: np.ndarray, link: LinkModel) -> np.ndarray:
    """Mean interference power each vehicle delivered to every satellite."""
    n, k = gain_t.shape
    antenna = np.full((n, k), link.sidelobe_gain)
    has = serving >= 0
    antenna[np.flatnonzero(has), serving[has]] = link.beam_gain
    return (power * active_frac)[:, None] * gain_t * antenna * link.mean_fading


def run_episode(cfg: ScenarioConfig, seed: int | None = None, policy: Policy | None = None,
                seed_sequence: np.random.SeedSequence | None = None) -> RunResult:
    """Simulate one episode; deterministic for a fixed config and seed."""
    cfg.validate()
    ts = cfg.timescale
    thr = cfg.thresholds
    out_model = cfg.handover.outage
    rule = validate_tick_rule(ts, min(cfg.safety.deadlines_ms) / 1000.0, out_model.min_ms / 1000.0)
    if not rule.passed:
        raise ValueError(f"tick length violates the resolution rule: {rule}")
    seed = cfg.seed if seed is None else int(seed)
    rngs = episode_streams(seed_sequence if seed_sequence is not None else seed)
    n_ticks = ts.ticks_per_slot
    slots = cfg.episode_slots

    geom = build_geometry(cfg, rngs["geometry"], rngs["shadowing"], slots)
    n_veh, n_cls = geom.n_vehicles, thr.num_classes
    n_sat = geom.sat_ids.size
    link = link_model(cfg, rngs["prediction"], n_veh)
    if policy is None:
        policy = make_policy(cfg.policy_name, cfg.policy)
    policy.reset(link)

    ch = cfg.channel
    noise = ch.noise_power
    gamma = ch.snr_threshold
    n_safe = np.asarray(thr.n_safe)
    eps = np.asarray(thr.epsilon)
    rate_min = np.asarray(cfg.power.rate_min)

    serving = np.full(n_veh, NO_SATELLITE, dtype=np.int64)
    ages = np.ones((n_veh, n_cls), dtype=np.int64)
    z = np.zeros((n_veh, n_cls))
    q_p = q_h = 0.0
    interference = np.zeros((n_veh, n_sat))

    age_log = np.empty((slots * n_ticks, n_veh, n_cls), dtype=np.int64)
    ho_tick_log = np.empty((slots * n_ticks, n_veh), dtype=bool)
    z_log = np.empty((slots * n_ticks, n_cls))
    serving_log = np.empty((slots, n_veh), dtype=np.int64)
    ho_log = np.zeros((slots, n_veh), dtype=bool)
    forced_log = np.zeros((slots, n_veh), dtype=bool)
    power_log = np.empty(slots)
    qp_log = np.empty(slots)
    qh_log = np.empty(slots)
    rate_violations = 0
    tick_idx = np.arange(n_ticks)

    for t in range(slots):
        fading = sample_shadowed_rician(ch, rngs["fading"], (n_veh, n_ticks))
        measured = sample_shadowed_rician(ch, rngs["measurement"], (n_veh, n_sat))
        tau_ms = np.atleast_1d(out_model.sample_ms(rngs["outage"], n_veh))
        gain_t = geom.gain[t]
        obs = SlotObservation(t, serving.copy(), geom.serviceable[t].copy(), geom.windows[t].copy(),
                              gain_t, interference.copy(), gain_t * measured, ages.copy(),
                              z.copy(), q_p, q_h, geom.sat_ids)
        actions = policy.decide(obs)
        if len(actions) != n_veh:
            raise RuntimeError(f"policy returned {len(actions)} actions for {n_veh} vehicles")

        new = np.array([a.serving_satellite for a in actions], dtype=np.int64)
        power = np.array([a.power for a in actions], dtype=float)
        flags = np.array([a.priority_flags for a in actions], dtype=bool).reshape(n_veh, n_cls)
        for v in range(n_veh):
            if new[v] >= 0 and not geom.serviceable[t, v, new[v]]:
                raise RuntimeError(f"slot {t}: vehicle {v} chose unavailable satellite {new[v]}")
            if not 0 <= power[v] <= link.p_max * (1 + 1e-12):
                raise RuntimeError(f"slot {t}: vehicle {v} power {power[v]} outside [0, p_max]")
        cur_ok = np.array([serving[v] >= 0 and geom.serviceable[t, v, serving[v]]
                           for v in range(n_veh)])
        attach = new >= 0
        handover = attach & (new != serving) & ~((t == 0) & (serving < 0))
        forced = handover & ~cur_ok
        n_out = np.zeros(n_veh, dtype=np.int64)
        for v in np.flatnonzero(handover):
            n_out[v] = min(outage_ticks(tau_ms[v] / 1000.0, ts.tick_seconds)[0], n_ticks)

        transmits = attach & (power > 0) & flags.any(axis=1)
        active = transmits[:, None] & (tick_idx[None, :] >= n_out[:, None])
        if cfg.ideal_channel:
            success = active
        else:
            coupling = _interference_matrix(np.where(transmits, power, 0.0), gain_t, new, link)
            interf = coupling @ active.astype(float)
            own = np.where(attach, gain_t[np.arange(n_veh), np.maximum(new, 0)], 0.0)
            signal = (power * own * link.beam_gain)[:, None] * fading
            success = active & (signal >= gamma * (noise + interf))

        per_class = success[:, None, :] & flags[:, :, None]
        tick_ages = age_trajectory(ages, per_class)
        viol = tick_ages > n_safe[None, :, None]
        z_trace = safety_queue_trace(z, viol, eps[None, :])
        z = z_trace[..., -1]
        ages = tick_ages[..., -1]
        sl = slice(t * n_ticks, (t + 1) * n_ticks)
        age_log[sl] = tick_ages.transpose(2, 0, 1)
        ho_tick_log[sl] = handover[None, :]
        z_log[sl] = z_trace.mean(axis=0).T

        p_tot = float(np.sum(np.where(transmits, power, 0.0)) + handover.sum() * link.p_ho)
        n_disc = int((handover & ~forced).sum())
        q_p = update_power_queue(q_p, p_tot, link.p_max)
        q_h = update_ho_queue(q_h, n_disc, link.ho_budget)

        if transmits.any():
            own_mean = gain_t[np.flatnonzero(transmits), new[transmits]] * link.beam_gain * link.mean_fading
            rates = mrt_rate(own_mean, power[transmits], noise)
            need = flags[transmits].astype(float) @ rate_min
            rate_violations += int(np.count_nonzero(np.atleast_1d(rates) < need - 1e-12))

        frac = (n_ticks - n_out) / n_ticks
        emitted = _emissions(np.where(transmits, power, 0.0), frac, gain_t, new, link)
        interference = emitted.sum(axis=0)[None, :] - emitted

        serving = new
        serving_log[t] = np.where(new >= 0, geom.sat_ids[np.maximum(new, 0)], NO_SATELLITE)
        ho_log[t] = handover
        forced_log[t] = forced
        power_log[t] = p_tot
        qp_log[t], qh_log[t] = q_p, q_h

    report = compliance_report(age_log, thr, z_log)
    mean_aoi = tuple(float(x) for x in age_log.mean(axis=(0, 1)))
    phases = tuple(phase_decomposition(age_log[:, :, m], ho_tick_log) for m in range(n_cls))
    events: list[PingPongEvent] = []
    for v in range(n_veh):
        events.extend(detect_pingpong(ho_log[:, v], serving_log[:, v], v))
    e2e = {}
    followers = range(1, cfg.platoon.vehicles_per_platoon)
    for gap in cfg.platoon.gaps_m:
        delays = [v2v_delay_ticks(h, gap, cfg.platoon.metres_per_tick) for h in followers]
        extra = float(np.mean(delays)) if delays else 0.0
        e2e[float(gap)] = tuple(a + extra for a in mean_aoi)
    return RunResult(
        policy=getattr(policy, "name", type(policy).__name__),
        seed=seed,
        mean_aoi=mean_aoi,
        violation_rate=report.violation_rate,
        epsilon=report.budget,
        n_safe=tuple(int(x) for x in thr.n_safe),
        weights=tuple(float(w) for w in thr.weights),
        compliant=report.compliant,
        mean_power_w=float(power_log.mean()),
        forced_ho=int(forced_log.sum()),
        disc_ho=int((ho_log & ~forced_log).sum()),
        pingpong=events,
        phase=phases,
        follower_e2e=e2e,
        z_slope=report.z_over_time_slope,
        rate_violations=rate_violations,
        queue_trace={"z_mean": z_log[n_ticks - 1::n_ticks].copy(), "q_power": qp_log,
                     "q_handover": qh_log},
        ages=age_log,
        in_handover=ho_tick_log,
        serving=serving_log,
        handover=ho_log,
        forced=forced_log,
        power=power_log,
    )
