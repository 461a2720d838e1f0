"""Walker-Delta constellation geometry, visibility sets and visibility windows.

Everything here is deterministic: the circular Walker-Delta model is the
prediction source used by the schedulers and the ground truth used by the
simulation engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_M = 6.371e6
EARTH_GM = 3.986004418e14
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ConstellationConfig:
    """Walker-Delta shell parameters.

    The default shell (72 planes of 22 satellites at 53 degrees) yields
    roughly ten satellites above a 25 degree mask at mid latitudes.
    """

    planes: int = 72
    sats_per_plane: int = 22
    phasing_factor: int = 39
    altitude: float = 550e3
    inclination: float = math.radians(53.0)
    earth_radius: float = EARTH_RADIUS_M
    earth_gravitational_parameter: float = EARTH_GM
    min_elevation: float = math.radians(25.0)

    def __post_init__(self) -> None:
        if self.planes <= 0 or self.sats_per_plane <= 0:
            raise ValueError("planes and sats_per_plane must be positive")
        if self.altitude <= 0:
            raise ValueError("altitude must be positive")
        if self.earth_radius <= 0 or self.earth_gravitational_parameter <= 0:
            raise ValueError("earth radius and GM must be positive")
        if not 0 <= self.phasing_factor < self.planes:
            raise ValueError("phasing_factor must lie in [0, planes)")

    @property
    def total_satellites(self) -> int:
        return self.planes * self.sats_per_plane

    @property
    def semi_major_axis(self) -> float:
        return self.earth_radius + self.altitude

    @property
    def angular_rate(self) -> float:
        """Mean motion in rad/s."""
        return math.sqrt(self.earth_gravitational_parameter / self.semi_major_axis**3)

    @property
    def orbital_period(self) -> float:
        return TWO_PI / self.angular_rate

    @property
    def orbital_speed(self) -> float:
        return self.semi_major_axis * self.angular_rate


@dataclass(frozen=True)
class SatelliteEphemeris:
    satellite_id: int
    raan: float
    phase_offset: float
    initial_anomaly: float = 0.0

    def __post_init__(self) -> None:
        for name in ("raan", "phase_offset", "initial_anomaly"):
            value = getattr(self, name)
            if not 0.0 <= value < TWO_PI:
                raise ValueError(f"{name} must be normalized to [0, 2pi), got {value}")


@dataclass(frozen=True)
class EphemerisTable:
    """Column-oriented ephemerides for vectorized propagation."""

    raan: np.ndarray
    phase: np.ndarray

    def __len__(self) -> int:
        return int(self.raan.shape[0])

    def subset(self, ids: np.ndarray) -> "EphemerisTable":
        return EphemerisTable(self.raan[ids], self.phase[ids])


def _wrap(angle: float) -> float:
    wrapped = math.fmod(angle, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    # fmod can land exactly on 2pi after the correction for tiny negatives
    return 0.0 if wrapped >= TWO_PI else wrapped


def walker_delta(cfg: ConstellationConfig, initial_anomaly: float = 0.0) -> list[SatelliteEphemeris]:
    """Standard Walker-Delta phasing, plane-major satellite numbering."""
    out = []
    s_per = cfg.sats_per_plane
    for p in range(cfg.planes):
        raan = _wrap(TWO_PI * p / cfg.planes)
        for s in range(s_per):
            phase = _wrap(TWO_PI * (s + p * cfg.phasing_factor / cfg.planes) / s_per)
            out.append(SatelliteEphemeris(p * s_per + s, raan, phase, _wrap(initial_anomaly)))
    return out


def ephemeris_table(ephemerides: list[SatelliteEphemeris]) -> EphemerisTable:
    raan = np.array([e.raan for e in ephemerides], dtype=float)
    phase = np.array([e.phase_offset + e.initial_anomaly for e in ephemerides], dtype=float)
    return EphemerisTable(raan, phase)


def _orbit_points(a_s: float, raan, anomaly, inclination: float) -> np.ndarray:
    cos_o, sin_o = np.cos(raan), np.sin(raan)
    cos_u, sin_u = np.cos(anomaly), np.sin(anomaly)
    cos_i, sin_i = math.cos(inclination), math.sin(inclination)
    x = cos_u * cos_o - sin_u * sin_o * cos_i
    y = cos_u * sin_o + sin_u * cos_o * cos_i
    z = sin_u * sin_i
    return a_s * np.stack(np.broadcast_arrays(x, y, z), axis=-1)


def satellite_position(eph: SatelliteEphemeris, cfg: ConstellationConfig, t: float,
                       slot_seconds: float = 1.0) -> np.ndarray:
    """ECI position (m) of one satellite at slot ``t``."""
    anomaly = eph.phase_offset + cfg.angular_rate * t * slot_seconds + eph.initial_anomaly
    return _orbit_points(cfg.semi_major_axis, eph.raan, anomaly, cfg.inclination)


def satellite_positions(table: EphemerisTable, cfg: ConstellationConfig,
                        times_s: np.ndarray) -> np.ndarray:
    """Positions for every (time, satellite); shape ``(len(times_s), K, 3)``."""
    times_s = np.atleast_1d(np.asarray(times_s, dtype=float))
    anomaly = table.phase[None, :] + cfg.angular_rate * times_s[:, None]
    return _orbit_points(cfg.semi_major_axis, table.raan[None, :], anomaly, cfg.inclination)


def satellite_velocities(table: EphemerisTable, cfg: ConstellationConfig,
                         times_s: np.ndarray) -> np.ndarray:
    """Time derivative of :func:`satellite_positions`."""
    times_s = np.atleast_1d(np.asarray(times_s, dtype=float))
    anomaly = table.phase[None, :] + cfg.angular_rate * times_s[:, None]
    return cfg.angular_rate * _orbit_points(
        cfg.semi_major_axis, table.raan[None, :], anomaly + math.pi / 2, cfg.inclination)


@dataclass(frozen=True)
class VehicleState:
    """A vehicle on a great-circle highway over a spherical, non-rotating Earth."""

    vehicle_id: int
    position: np.ndarray
    speed: float
    heading: np.ndarray

    def __post_init__(self) -> None:
        pos = np.asarray(self.position, dtype=float)
        head = np.asarray(self.heading, dtype=float)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "heading", head / np.linalg.norm(head))
        if self.speed < 0:
            raise ValueError("speed must be non-negative")

    def advanced(self, seconds: float) -> "VehicleState":
        """State after driving ``seconds`` along the great circle."""
        radius = float(np.linalg.norm(self.position))
        angle = self.speed * seconds / radius
        up = self.position / radius
        pos = radius * (math.cos(angle) * up + math.sin(angle) * self.heading)
        head = -math.sin(angle) * up + math.cos(angle) * self.heading
        return VehicleState(self.vehicle_id, pos, self.speed, head)


def highway_vehicle(vehicle_id: int, latitude: float, longitude: float, azimuth: float,
                    speed: float, offset_m: float = 0.0,
                    earth_radius: float = EARTH_RADIUS_M) -> VehicleState:
    """Vehicle at a geodetic point heading along ``azimuth`` (rad, from north),
    shifted ``offset_m`` metres along the road."""
    clat, slat = math.cos(latitude), math.sin(latitude)
    clon, slon = math.cos(longitude), math.sin(longitude)
    up = np.array([clat * clon, clat * slon, slat])
    east = np.array([-slon, clon, 0.0])
    north = np.array([-slat * clon, -slat * slon, clat])
    heading = math.cos(azimuth) * north + math.sin(azimuth) * east
    base = VehicleState(vehicle_id, earth_radius * up, speed, heading)
    if offset_m == 0.0:
        return base
    moved = VehicleState(vehicle_id, base.position, 1.0, heading).advanced(offset_m)
    return VehicleState(vehicle_id, moved.position, speed, moved.heading)


def vehicle_track(veh: VehicleState, times_s: np.ndarray) -> np.ndarray:
    """Vectorized great-circle positions, shape ``(len(times_s), 3)``."""
    times_s = np.atleast_1d(np.asarray(times_s, dtype=float))
    radius = float(np.linalg.norm(veh.position))
    angle = veh.speed * times_s / radius
    up = veh.position / radius
    return radius * (np.cos(angle)[:, None] * up + np.sin(angle)[:, None] * veh.heading)


@dataclass(frozen=True)
class GeometrySample:
    elevation: float
    slant_range: float
    link_direction: np.ndarray
    visible: bool


def elevation_and_range(sat_pos: np.ndarray, veh: VehicleState,
                        min_elevation: float = math.radians(25.0)) -> GeometrySample:
    sat_pos = np.asarray(sat_pos, dtype=float)
    if np.linalg.norm(sat_pos) <= np.linalg.norm(veh.position):
        raise ValueError("satellite must be farther from the Earth centre than the vehicle")
    los = sat_pos - veh.position
    rng = float(np.linalg.norm(los))
    up = veh.position / np.linalg.norm(veh.position)
    direction = los / rng
    elev = math.asin(max(-1.0, min(1.0, float(direction @ up))))
    return GeometrySample(elev, rng, direction, elev >= min_elevation)


def elevation_range_grid(sat_pos: np.ndarray, veh_pos: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elevation and slant range for every vehicle/satellite pair.

    ``sat_pos`` is ``(..., K, 3)`` and ``veh_pos`` is ``(..., V, 3)`` with
    matching leading dimensions; results are ``(..., V, K)``.
    """
    los = sat_pos[..., None, :, :] - veh_pos[..., :, None, :]
    rng = np.linalg.norm(los, axis=-1)
    up = veh_pos / np.linalg.norm(veh_pos, axis=-1, keepdims=True)
    sin_el = np.einsum("...vkc,...vc->...vk", los, up) / rng
    return np.arcsin(np.clip(sin_el, -1.0, 1.0)), rng


def visible_set(cfg: ConstellationConfig, ephemerides: list[SatelliteEphemeris],
                veh: VehicleState, t: float, slot_seconds: float = 1.0,
                min_elevation: float | None = None) -> frozenset[int]:
    """Satellites whose elevation at slot ``t`` meets the mask.

    ``veh`` is the vehicle state at slot ``t``.
    """
    mask = cfg.min_elevation if min_elevation is None else min_elevation
    table = ephemeris_table(ephemerides)
    pos = satellite_positions(table, cfg, np.array([t * slot_seconds]))[0]
    elev, _ = elevation_range_grid(pos, veh.position[None, :])
    ids = np.array([e.satellite_id for e in ephemerides])
    return frozenset(int(i) for i in ids[elev[0] >= mask])


@dataclass(frozen=True)
class WindowPrediction:
    slots: int
    censored: bool


def visibility_window(cfg: ConstellationConfig, eph: SatelliteEphemeris, veh: VehicleState,
                      t: int, slot_seconds: float = 1.0, cap: int = 120,
                      min_elevation: float | None = None) -> WindowPrediction:
    """Consecutive visible slots starting at ``t`` (inclusive).

    ``veh`` is the vehicle state at slot ``t``; it keeps driving during the
    forward scan. Returns 0 when the satellite is not visible at ``t`` and
    ``cap`` with ``censored=True`` when visibility outlasts the scan.
    """
    mask = cfg.min_elevation if min_elevation is None else min_elevation
    offsets = np.arange(cap)
    sat = satellite_positions(ephemeris_table([eph]), cfg, (t + offsets) * slot_seconds)[:, 0, :]
    veh_pos = vehicle_track(veh, offsets * slot_seconds)
    elev, _ = elevation_range_grid(sat[:, None, :], veh_pos[:, None, :])
    visible = elev[:, 0, 0] >= mask
    if visible.all():
        return WindowPrediction(cap, True)
    return WindowPrediction(int(np.argmin(visible)), False)


def forward_run_lengths(flags: np.ndarray, cap: int) -> tuple[np.ndarray, np.ndarray]:
    """Run length of consecutive True values starting at each index along axis 0.

    Values are clipped at ``cap``; the second array marks entries whose run
    reached the cap or ran off the end of the table (censored).
    """
    flags = np.asarray(flags, dtype=bool)
    runs = np.zeros(flags.shape, dtype=np.int64)
    censored = np.zeros(flags.shape, dtype=bool)
    carry = np.zeros(flags.shape[1:], dtype=np.int64)
    open_end = np.ones(flags.shape[1:], dtype=bool)
    for i in range(flags.shape[0] - 1, -1, -1):
        carry = np.where(flags[i], carry + 1, 0)
        open_end = np.where(flags[i], open_end, False)
        runs[i] = carry
        censored[i] = flags[i] & (open_end | (carry >= cap))
    return np.minimum(runs, cap), censored | (runs >= cap)
