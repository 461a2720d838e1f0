"""Scenario configuration and the dotted-key config file format.

The file format is TOML restricted to flat ``block.key = value`` lines, for
example::

    # shorter handover interruptions
    episode_slots = 300
    handover.ho_mean_ms = 180
    dpp.V = 100
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable

from ..aoi import OutageModel, SafetyThresholds, TimescaleConfig
from ..channel import ChannelParams
from ..constellation import ConstellationConfig
from ..schedulers.base import PolicyConfig, log_power_grid

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class SafetyConfig:
    deadlines_ms: tuple[float, ...] = (100.0, 200.0, 1000.0)
    epsilon: tuple[float, ...] = (0.01, 0.05, 0.20)
    weights: tuple[float, ...] = (5.0, 2.0, 0.5)
    slater_slack: float = 0.005

    def thresholds(self, tick_seconds: float) -> SafetyThresholds:
        return SafetyThresholds.from_deadlines([d / 1000.0 for d in self.deadlines_ms],
                                               tick_seconds, self.epsilon, self.weights)


@dataclass(frozen=True)
class HandoverConfig:
    """Outage statistics, signalling power, budget and the beam-dwell period."""

    outage: OutageModel = OutageModel()
    p_ho_w: float = 1.0
    budget: float = 0.2
    period_s: float = 15.0
    window_cap: int = 120


@dataclass(frozen=True)
class PowerConfig:
    p_max_w: float = 10.0
    rate_min: tuple[float, ...] = (0.5, 0.2, 0.1)


@dataclass(frozen=True)
class PlatoonConfig:
    platoons: int = 5
    vehicles_per_platoon: int = 6
    speed_kmh: tuple[float, float] = (36.0, 54.0)
    gaps_m: tuple[float, ...] = (5.0, 15.0, 25.0, 35.0)
    latitude_deg: float = 35.0
    longitude_deg: float = 0.0
    azimuth_deg: float = 90.0
    spacing_m: float = 400.0
    metres_per_tick: float = 60.0

    def __post_init__(self) -> None:
        if self.platoons < 1 or self.vehicles_per_platoon < 1:
            raise ValueError("need at least one platoon of one vehicle")
        lo, hi = self.speed_kmh
        if not 0 <= lo <= hi:
            raise ValueError("speed range must satisfy 0 <= low <= high")


@dataclass(frozen=True)
class ScenarioConfig:
    constellation: ConstellationConfig = ConstellationConfig()
    channel: ChannelParams = ChannelParams()
    timescale: TimescaleConfig = TimescaleConfig()
    safety: SafetyConfig = SafetyConfig()
    handover: HandoverConfig = HandoverConfig()
    power: PowerConfig = PowerConfig()
    platoon: PlatoonConfig = PlatoonConfig()
    policy: PolicyConfig = PolicyConfig()
    policy_name: str = "dpp"
    episode_slots: int = 500
    seed: int = 1
    subchannels: int = 3
    ideal_channel: bool = False
    pool_size: int = 2000

    def __post_init__(self) -> None:
        if self.episode_slots < 1:
            raise ValueError("episode_slots must be positive")
        n_classes = len(self.safety.epsilon)
        if len(self.power.rate_min) != n_classes or len(self.safety.deadlines_ms) != n_classes:
            raise ValueError("per-class settings must agree in length")

    def validate(self) -> None:
        """Cross-block checks deferred until the config is complete."""
        if max(self.policy.power_grid) > self.power.p_max_w * (1 + 1e-12):
            raise ValueError("power grid exceeds p_max")
        if self.handover.window_cap < 1:
            raise ValueError("window_cap must be positive")

    @property
    def thresholds(self) -> SafetyThresholds:
        return self.safety.thresholds(self.timescale.tick_seconds)


def _tuple(conv: Callable[[Any], Any]) -> Callable[[Any], tuple]:
    def inner(value: Any) -> tuple:
        if not isinstance(value, (list, tuple)):
            raise TypeError(f"expected a list, got {value!r}")
        return tuple(conv(v) for v in value)
    return inner


def _bool(value: Any) -> bool:
    if not isinstance(value, bool):
        raise TypeError(f"expected true/false, got {value!r}")
    return value


@dataclass(frozen=True)
class _Field:
    """Plain assignment of one (block, field) or top-level field."""

    path: tuple[str, ...]
    conv: Callable[[Any], Any]


def _setter(path: tuple[str, ...], conv: Callable[[Any], Any]) -> _Field:
    return _Field(path, conv)


def _deg(value: Any) -> float:
    return math.radians(float(value))


def _timescale(cfg: ScenarioConfig, overrides: dict[str, Any]) -> ScenarioConfig:
    """Apply slot/tick keys together so intermediate states need not be valid."""
    slot = float(overrides.get("timescale.slot_s", cfg.timescale.slot_seconds))
    if "timescale.ticks_per_slot" in overrides:
        if "timescale.tick_ms" in overrides:
            raise ValueError("give either timescale.tick_ms or timescale.ticks_per_slot")
        ts = TimescaleConfig.from_ticks_per_slot(int(overrides["timescale.ticks_per_slot"]), slot)
    elif "timescale.tick_ms" in overrides:
        ts = TimescaleConfig(slot, float(overrides["timescale.tick_ms"]) / 1000.0)
    else:
        ts = TimescaleConfig.from_ticks_per_slot(cfg.timescale.ticks_per_slot, slot)
    return replace(cfg, timescale=ts)


def _unused(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    return cfg  # handled by _timescale


def _n_safe(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    tick_ms = cfg.timescale.tick_seconds * 1000.0
    deadlines = tuple(int(n) * tick_ms for n in _tuple(int)(value))
    return replace(cfg, safety=replace(cfg.safety, deadlines_ms=deadlines))


def _power_grid(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    return replace(cfg, policy=replace(cfg.policy, power_grid=_tuple(float)(value)))


def _power_levels(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    grid = log_power_grid(cfg.power.p_max_w, int(value))
    return replace(cfg, policy=replace(cfg.policy, power_grid=grid))


def _policy(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    from ..schedulers import POLICY_NAMES
    name = str(value)
    if name not in POLICY_NAMES + ("dpp-reactive",):
        raise ValueError(f"unknown policy {name!r}")
    return replace(cfg, policy_name=name)


def _outage(name: str):
    def apply(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
        out = replace(cfg.handover.outage, **{name: float(value)})
        return replace(cfg, handover=replace(cfg.handover, outage=out))
    return apply


def _speed(cfg: ScenarioConfig, value: Any) -> ScenarioConfig:
    lo, hi = _tuple(float)(value)
    return replace(cfg, platoon=replace(cfg.platoon, speed_kmh=(lo, hi)))


KEYS: dict[str, "_Field | Callable[[ScenarioConfig, Any], ScenarioConfig]"] = {
    "episode_slots": _setter(("episode_slots",), int),
    "seed": _setter(("seed",), int),
    "policy": _policy,
    "subchannels": _setter(("subchannels",), int),
    "constellation.altitude_m": _setter(("constellation", "altitude"), float),
    "constellation.inclination_deg": _setter(("constellation", "inclination"), _deg),
    "constellation.planes": _setter(("constellation", "planes"), int),
    "constellation.sats_per_plane": _setter(("constellation", "sats_per_plane"), int),
    "constellation.phasing_factor": _setter(("constellation", "phasing_factor"), int),
    "constellation.min_elevation_deg": _setter(("constellation", "min_elevation"), _deg),
    "channel.fc_hz": _setter(("channel", "carrier_frequency"), float),
    "channel.bandwidth_hz": _setter(("channel", "bandwidth"), float),
    "channel.noise_figure_db": _setter(("channel", "noise_figure_db"), float),
    "channel.noise_dbm": _setter(("channel", "noise_dbm"), float),
    "channel.sr_m": _setter(("channel", "sr_m"), float),
    "channel.sr_b": _setter(("channel", "sr_b"), float),
    "channel.sr_omega": _setter(("channel", "sr_Omega"), float),
    "channel.gamma_th_db": _setter(("channel", "snr_threshold_db"), float),
    "channel.zenith_loss_db": _setter(("channel", "zenith_loss"), float),
    "channel.sf_sigma_db": _setter(("channel", "shadow_fading_sigma"), float),
    "channel.sidelobe_factor": _setter(("channel", "sidelobe_factor"), float),
    "channel.beam_gain": _setter(("channel", "beam_gain"), float),
    "channel.sat_gain_db": _setter(("channel", "sat_gain_db"), float),
    "channel.ideal": _setter(("ideal_channel",), _bool),
    "channel.pool_size": _setter(("pool_size",), int),
    "timescale.slot_s": _unused,
    "timescale.tick_ms": _unused,
    "timescale.ticks_per_slot": _unused,
    "safety.n_safe": _n_safe,
    "safety.deadlines_ms": _setter(("safety", "deadlines_ms"), _tuple(float)),
    "safety.epsilon": _setter(("safety", "epsilon"), _tuple(float)),
    "safety.weights": _setter(("safety", "weights"), _tuple(float)),
    "safety.slater_slack": _setter(("safety", "slater_slack"), float),
    "handover.ho_mean_ms": _outage("mean_ms"),
    "handover.ho_std_ms": _outage("std_ms"),
    "handover.ho_min_ms": _outage("min_ms"),
    "handover.p_ho_w": _setter(("handover", "p_ho_w"), float),
    "handover.budget": _setter(("handover", "budget"), float),
    "handover.period_s": _setter(("handover", "period_s"), float),
    "handover.window_cap": _setter(("handover", "window_cap"), int),
    "power.p_max_w": _setter(("power", "p_max_w"), float),
    "power.rate_min": _setter(("power", "rate_min"), _tuple(float)),
    "platoon.count": _setter(("platoon", "platoons"), int),
    "platoon.vehicles": _setter(("platoon", "vehicles_per_platoon"), int),
    "platoon.speed_kmh": _speed,
    "platoon.gaps_m": _setter(("platoon", "gaps_m"), _tuple(float)),
    "platoon.latitude_deg": _setter(("platoon", "latitude_deg"), float),
    "platoon.longitude_deg": _setter(("platoon", "longitude_deg"), float),
    "platoon.azimuth_deg": _setter(("platoon", "azimuth_deg"), float),
    "platoon.spacing_m": _setter(("platoon", "spacing_m"), float),
    "dpp.V": _setter(("policy", "V"), float),
    "dpp.power_grid": _power_grid,
    "dpp.power_levels": _power_levels,
    "proactive.enabled": _setter(("policy", "proactive"), _bool),
    "proactive.kappa_safe": _setter(("policy", "kappa_safe"), float),
    "proactive.z_scale": _setter(("policy", "z_scale"), float),
    "proactive.horizon_cap": _setter(("policy", "horizon_cap"), int),
    "proactive.mu_n": _setter(("policy", "mu_n"), float),
}

# keys whose effect depends on others are applied last, in this order
_LATE = ("dpp.power_levels", "safety.n_safe")


def _flatten(table: dict, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in table.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def apply_overrides(cfg: ScenarioConfig, overrides: dict[str, Any]) -> ScenarioConfig:
    """Return ``cfg`` with dotted-key overrides applied; unknown keys raise."""
    unknown = sorted(set(overrides) - set(KEYS))
    if unknown:
        raise KeyError(f"unknown config keys: {', '.join(unknown)}")
    if any(k.startswith("timescale.") for k in overrides):
        cfg = _timescale(cfg, overrides)
    # plain fields are grouped per block so each block is validated once
    top: dict[str, Any] = {}
    blocks: dict[str, dict[str, Any]] = {}
    calls = []
    for key, value in overrides.items():
        handler = KEYS[key]
        if isinstance(handler, _Field):
            if len(handler.path) == 1:
                top[handler.path[0]] = handler.conv(value)
            else:
                blocks.setdefault(handler.path[0], {})[handler.path[1]] = handler.conv(value)
        elif key not in _LATE and not key.startswith("timescale."):
            calls.append(key)
    for block, values in blocks.items():
        top[block] = replace(getattr(cfg, block), **values)
    if top:
        cfg = replace(cfg, **top)
    for key in calls + [k for k in _LATE if k in overrides]:
        cfg = KEYS[key](cfg, overrides[key])
    return cfg


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    data = tomllib.loads(text)
    return apply_overrides(base or ScenarioConfig(), _flatten(data))


def load_config(path: str | Path | None, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Read a config file; ``None`` returns the defaults."""
    if path is None:
        return base or ScenarioConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def describe(cfg: ScenarioConfig) -> dict[str, Any]:
    """Nested plain-dict view of a config, for logs and JSON output."""
    def conv(obj: Any) -> Any:
        if hasattr(obj, "__dataclass_fields__"):
            return {f.name: conv(getattr(obj, f.name)) for f in fields(obj)}
        if isinstance(obj, tuple):
            return [conv(x) for x in obj]
        return obj
    return conv(cfg)


DEFAULT_CONFIG_TEXT = """\
# Scenario defaults. Every key is optional; omitted keys keep these values.
episode_slots = 500
seed = 1
policy = "dpp"

constellation.altitude_m = 550000.0
constellation.inclination_deg = 53.0
constellation.planes = 72
constellation.sats_per_plane = 22
constellation.phasing_factor = 39
constellation.min_elevation_deg = 25.0

channel.fc_hz = 1.67e9
channel.bandwidth_hz = 10e6
channel.noise_figure_db = 7.0
channel.sr_m = 10.0
channel.sr_b = 0.126
channel.sr_omega = 1.29
channel.zenith_loss_db = 0.5
channel.sf_sigma_db = 2.0
channel.sidelobe_factor = 0.05
channel.beam_gain = 16.0
channel.sat_gain_db = 30.0
channel.gamma_th_db = {gamma:.4f}

timescale.slot_s = 1.0
timescale.tick_ms = 20.0

safety.deadlines_ms = [100.0, 200.0, 1000.0]
safety.epsilon = [0.01, 0.05, 0.20]
safety.weights = [5.0, 2.0, 0.5]

handover.ho_mean_ms = 225.0
handover.ho_std_ms = 25.0
handover.ho_min_ms = 150.0
handover.p_ho_w = 1.0
handover.budget = 0.2
handover.period_s = 15.0
handover.window_cap = 120

power.p_max_w = 10.0
power.rate_min = [0.5, 0.2, 0.1]

platoon.count = 5
platoon.vehicles = 6
platoon.speed_kmh = [36.0, 54.0]
platoon.gaps_m = [5.0, 15.0, 25.0, 35.0]
platoon.latitude_deg = 35.0

dpp.V = 50.0
dpp.power_levels = 8
proactive.enabled = true
proactive.kappa_safe = 5.0
proactive.z_scale = 10.0
proactive.horizon_cap = 10
"""


def default_config_text() -> str:
    return DEFAULT_CONFIG_TEXT.format(gamma=ChannelParams().snr_threshold_db)
