"""Doppler analytics, path gain, Shadowed-Rician fading and link success probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 2.998e8
THERMAL_NOISE_DBM_HZ = -174.0
COHERENCE_CONSTANT = 0.423


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ChannelParams:
    """Link-budget and fading parameters.

    ``noise_dbm`` overrides the thermal-noise figure derived from bandwidth
    and noise figure when given. ``sat_gain_db`` is the receive antenna gain
    of the satellite and ``beam_gain`` the array gain of the vehicle's UPA.
    """

    carrier_frequency: float = 1.67e9
    bandwidth: float = 10e6
    noise_figure_db: float = 7.0
    noise_dbm: float | None = None
    sr_m: float = 10.0
    sr_b: float = 0.126
    sr_Omega: float = 1.29
    zenith_loss: float = 0.5
    shadow_fading_sigma: float = 2.0
    snr_threshold_db: float = 12.05
    beam_gain: float = 16.0
    sidelobe_factor: float = 0.05
    sat_gain_db: float = 30.0

    def __post_init__(self) -> None:
        if min(self.sr_m, self.sr_b, self.sr_Omega) <= 0:
            raise ValueError("Shadowed-Rician parameters must be positive")
        if self.bandwidth <= 0 or self.carrier_frequency <= 0:
            raise ValueError("bandwidth and carrier frequency must be positive")
        if self.beam_gain <= 0 or not 0 <= self.sidelobe_factor <= 1:
            raise ValueError("beam_gain must be positive and sidelobe_factor in [0, 1]")

    @property
    def noise_power(self) -> float:
        """Noise power in watts."""
        if self.noise_dbm is not None:
            dbm = self.noise_dbm
        else:
            dbm = THERMAL_NOISE_DBM_HZ + 10 * math.log10(self.bandwidth) + self.noise_figure_db
        return 10 ** ((dbm - 30.0) / 10.0)

    @property
    def snr_threshold(self) -> float:
        return 10 ** (self.snr_threshold_db / 10.0)

    @property
    def mean_fading_power(self) -> float:
        return self.sr_Omega + 2.0 * self.sr_b

    @property
    def sat_gain(self) -> float:
        return 10 ** (self.sat_gain_db / 10.0)


# --------------------------------------------------------------------- Doppler

def compound_doppler(v_sat: float, v_veh: float, theta_sat: float, psi_veh: float,
                     f_c: float) -> float:
    """Net Doppler shift (Hz): satellite term minus vehicle term."""
    if v_sat < 0 or v_veh < 0:
        raise ValueError("speeds must be non-negative")
    return f_c / SPEED_OF_LIGHT * (v_sat * math.sin(theta_sat) - v_veh * math.cos(psi_veh))


@dataclass(frozen=True)
class DopplerReport:
    f_sat: float
    f_veh: float
    f_total: float
    coherence_time: float
    doppler_ratio: float | None
    nsi_tick: float
    nsi_slot: float
    below_mask: bool = False


def coherence_report(v_sat: float, v_veh: float, theta_sat: float, psi_veh: float,
                     f_c: float, tick_seconds: float, slot_seconds: float) -> DopplerReport:
    """Doppler components, coherence time and nonstationarity indices.

    A zero net shift gives an infinite coherence time and zero indices. A
    satellite at or below the horizon leaves the Doppler ratio undefined;
    that case returns ``doppler_ratio=None`` with ``below_mask=True``.
    """
    f_sat = f_c / SPEED_OF_LIGHT * v_sat * math.sin(theta_sat)
    f_veh = f_c / SPEED_OF_LIGHT * v_veh * math.cos(psi_veh)
    f_total = compound_doppler(v_sat, v_veh, theta_sat, psi_veh, f_c)
    t_c = math.inf if f_total == 0 else COHERENCE_CONSTANT / abs(f_total)
    below = math.sin(theta_sat) <= 0 or v_sat == 0
    ratio = None if below else v_veh / (v_sat * math.sin(theta_sat))
    return DopplerReport(f_sat, f_veh, f_total, t_c, ratio,
                         tick_seconds / t_c, slot_seconds / t_c, below)


# -------------------------------------------------------------- large scale

def fspl_db(d, f_c: float):
    return 20.0 * np.log10(4.0 * math.pi * np.asarray(d, dtype=float) * f_c / SPEED_OF_LIGHT)


def path_loss_db(d, theta, f_c: float, zenith_loss: float, shadow_db=0.0):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise ValueError("path loss requires a positive elevation angle")
    return fspl_db(d, f_c) + shadow_db + zenith_loss / np.sin(theta)


def path_gain(d: float, theta: float, f_c: float, params: ChannelParams,
              shadow_db: float = 0.0) -> float:
    """Linear large-scale gain, the reciprocal of the total path loss."""
    if d <= 0:
        raise ValueError("distance must be positive")
    return float(10 ** (-path_loss_db(d, theta, f_c, params.zenith_loss, shadow_db) / 10.0))


# -------------------------------------------------------------- small scale

def sample_shadowed_rician(params: ChannelParams, rng: np.random.Generator,
                           size: int | tuple[int, ...] | None = None):
    """Fading power draws: Gamma-shadowed LOS plus complex Gaussian scatter."""
    los_power = rng.gamma(shape=params.sr_m, scale=params.sr_Omega / params.sr_m, size=size)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=size)
    sd = math.sqrt(params.sr_b)
    re = np.sqrt(los_power) * np.cos(phase) + sd * rng.standard_normal(size)
    im = np.sqrt(los_power) * np.sin(phase) + sd * rng.standard_normal(size)
    return re * re + im * im


def tick_sinr(tx_power, path_gain, fading_power, beam_gain, interference, noise_power):
    if np.any(np.asarray(noise_power) <= 0):
        raise ValueError("noise power must be positive")
    return tx_power * path_gain * fading_power * beam_gain / (noise_power + interference)


def slot_success_prob(per_tick_probs: Sequence[float], schedule: Sequence[int]) -> float:
    """Probability that at least one scheduled tick succeeds."""
    p = np.asarray(per_tick_probs, dtype=float)
    d = np.asarray(schedule, dtype=float)
    if p.shape != d.shape:
        raise ValueError("per_tick_probs and schedule must have equal length")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    return float(1.0 - np.prod(1.0 - d * p))


class FadingPool:
    """Sorted Shadowed-Rician draws used as an empirical survival function.

    Using one fixed pool for every prediction keeps the controller's success
    estimates smooth, monotone in SINR, and reproducible.
    """

    def __init__(self, params: ChannelParams, rng: np.random.Generator, size: int = 2000):
        self.draws = np.sort(sample_shadowed_rician(params, rng, size))
        self.threshold = params.snr_threshold

    def success_probability(self, mean_sinr):
        """P(fading * mean_sinr >= threshold) for scalar or array ``mean_sinr``."""
        mean_sinr = np.asarray(mean_sinr, dtype=float)
        with np.errstate(divide="ignore"):
            needed = np.where(mean_sinr > 0, self.threshold / np.maximum(mean_sinr, 1e-300), np.inf)
        below = np.searchsorted(self.draws, needed, side="left")
        return (self.draws.size - below) / self.draws.size


def calibrate_threshold_db(params: ChannelParams, slant_range: float, elevation: float,
                           tx_power: float, target_success: float,
                           rng: np.random.Generator, draws: int = 200_000) -> float:
    """SNR threshold giving ``target_success`` per-tick success at the given
    geometry and power, with no interference and no shadowing."""
    if not 0 < target_success < 1:
        raise ValueError("target_success must lie in (0, 1)")
    gain = path_gain(slant_range, elevation, params.carrier_frequency, params)
    mean_snr = tx_power * gain * params.beam_gain * params.sat_gain / params.noise_power
    fading = sample_shadowed_rician(params, rng, draws)
    return float(linear_to_db(mean_snr * np.quantile(fading, 1.0 - target_success)))
