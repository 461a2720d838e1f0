"""Maximum-ratio transmission and the resulting single-stream rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MrtBeam:
    """MRT beam summarized by the effective power gain it achieves."""

    power: float
    effective_gain: float


def mrt_beamformer(h: np.ndarray, power: float) -> np.ndarray:
    """Unit channel direction scaled to ``power``; zero vector for a null channel."""
    h = np.asarray(h, dtype=complex)
    norm = np.linalg.norm(h)
    if norm == 0:
        return np.zeros_like(h)
    return np.sqrt(power) * h / norm


def beam_rate(h: np.ndarray, w: np.ndarray, noise_power: float) -> float:
    """Rate in bit/s/Hz of beam ``w`` over channel ``h``."""
    return float(np.log2(1.0 + abs(np.vdot(h, w)) ** 2 / noise_power))


def mrt_rate(channel_gain, power, noise_power: float):
    """Beam description and rate ``log2(1 + power * gain / noise)``.

    ``channel_gain`` is the squared channel norm; array inputs broadcast and
    return only the rate array.
    """
    if np.any(np.asarray(channel_gain) < 0):
        raise ValueError("channel gain must be non-negative")
    rate = np.log2(1.0 + np.asarray(power, dtype=float) * channel_gain / noise_power)
    if np.ndim(rate) == 0:
        return MrtBeam(float(power), float(power) * float(channel_gain)), float(rate)
    return rate
