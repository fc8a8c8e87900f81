"""
Truth trajectories that drive the error model.

Trajectories are analytic: the body attitude, angular rate and specific
force are computed in closed form, never integrated from IMU samples.

CSV format (header required, comma separated, UTF-8)::

    t,roll,pitch,yaw,wx,wy,wz,fx,fy,fz,lat,lon,h,vE,vN,vU

with angles in deg, rates in deg/s, specific force in m/s^2, height in m
and ENU velocity in m/s. Euler angles follow ``C_b^n = Rz(yaw) Rx(pitch)
Ry(roll)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from numpy.typing import NDArray

from .errors import TrajectoryError
from .sins_model import Earth, TrajectorySample

CSV_COLUMNS = ("t", "roll", "pitch", "yaw", "wx", "wy", "wz", "fx", "fy", "fz", "lat", "lon", "h", "vE", "vN", "vU")


@dataclass(frozen=True)
class RotationProfile:
    """Back-and-forth turn about body z: +turn, dwell, -turn, dwell, repeated."""

    rate: float = math.radians(6.0)
    turn_angle: float = math.radians(360.0)
    dwell: float = 30.0
    ramp: float = 1.0

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ValueError("rotation rate must be positive")
        if not self.turn_angle > 0.0 or self.dwell < 0.0 or self.ramp < 0.0:
            raise ValueError("turn_angle must be positive, dwell and ramp non-negative")
        if 2.0 * self.ramp >= self.turn_duration:
            raise ValueError("rate ramps longer than the turn itself")

    @property
    def turn_duration(self) -> float:
        return self.turn_angle / self.rate

    @property
    def period(self) -> float:
        return 2.0 * (self.turn_duration + self.dwell)

    @property
    def peak_rate(self) -> float:
        # trapezoidal rate profile covering turn_angle within turn_duration
        return self.turn_angle / (self.turn_duration - self.ramp)

    def _turn(self, s: float) -> tuple[float, float]:
        """Angle and rate at time s into a positive turn."""
        D, r, tau = self.turn_duration, self.peak_rate, self.ramp
        if s <= 0.0:
            return 0.0, 0.0
        if s >= D:
            return self.turn_angle, 0.0
        if tau > 0.0 and s < tau:
            return 0.5 * r * s * s / tau, r * s / tau
        if tau > 0.0 and s > D - tau:
            u = D - s
            return self.turn_angle - 0.5 * r * u * u / tau, r * u / tau
        return 0.5 * r * tau + r * (s - tau), r

    def yaw(self, t: float) -> tuple[float, float]:
        """Yaw angle (rad) and yaw rate (rad/s) at time t."""
        D, W = self.turn_duration, self.dwell
        s = math.fmod(t, self.period)
        if s < D:
            return self._turn(s)
        s -= D
        if s < W:
            return self.turn_angle, 0.0
        s -= W
        if s < D:
            a, r = self._turn(s)
            return self.turn_angle - a, -r
        return 0.0, 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario definition; angles in rad, times in s, height in m."""

    kind: str = "static"
    lat: float = math.radians(34.0)
    lon: float = math.radians(108.0)
    h: float = 0.0
    duration: float = 3600.0
    step: float = 1.0
    rotation: RotationProfile | None = None
    path: str | None = None
    earth: Earth = field(default_factory=Earth)

    def __post_init__(self):
        if self.kind not in ("static", "single_axis_rotation", "file"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if not self.duration > 0.0 or not self.step > 0.0 or self.step > self.duration:
            raise ValueError("need duration > 0 and 0 < step <= duration")
        if self.kind == "file" and not self.path:
            raise ValueError("file scenario needs a path")

    def times(self) -> NDArray[np.float64]:
        count = int(math.floor(self.duration / self.step + 1e-9))
        t = np.arange(count + 1) * self.step
        if self.duration - t[-1] > 1e-9 * self.duration:
            t = np.append(t, self.duration)
        return t


def euler_to_cbn(roll: float, pitch: float, yaw: float) -> NDArray[np.float64]:
    sr, cr = math.sin(roll), math.cos(roll)
    sp, cp = math.sin(pitch), math.cos(pitch)
    sy, cy = math.sin(yaw), math.cos(yaw)
    return np.array([
        [cy * cr - sy * sp * sr, -sy * cp, cy * sr + sy * sp * cr],
        [sy * cr + cy * sp * sr, cy * cp, sy * sr - cy * sp * cr],
        [-cp * sr, sp, cp * cr],
    ])  # fmt: skip


def cbn_to_euler(cbn: NDArray) -> tuple[float, float, float]:
    """Inverse of :func:`euler_to_cbn`; returns (roll, pitch, yaw) in rad."""
    pitch = math.asin(max(-1.0, min(1.0, cbn[2, 1])))
    roll = math.atan2(-cbn[2, 0], cbn[2, 2])
    yaw = math.atan2(-cbn[0, 1], cbn[1, 1])
    return roll, pitch, yaw


def _level_sample(config: ScenarioConfig, t: float, yaw: float, yaw_rate: float) -> TrajectorySample:
    earth = config.earth
    cbn = euler_to_cbn(0.0, 0.0, yaw)
    cnb = cbn.T
    omega = cnb @ earth.wie_n(config.lat) + np.array([0.0, 0.0, yaw_rate])
    f_b = -cnb @ earth.g_n(config.h)
    return TrajectorySample(float(t), cbn, omega, f_b, config.lat, config.lon, config.h, np.zeros(3))


def gen_static(config: ScenarioConfig) -> list[TrajectorySample]:
    """Level, north-aligned, stationary vehicle sampled at every step."""
    if config.kind != "static":
        raise ValueError(f"gen_static needs a static scenario, got {config.kind!r}")
    return [_level_sample(config, t, 0.0, 0.0) for t in config.times()]


def gen_single_axis_rotation(config: ScenarioConfig) -> list[TrajectorySample]:
    """Stationary vehicle turning back and forth about its vertical axis."""
    if config.kind != "single_axis_rotation":
        raise ValueError(f"gen_single_axis_rotation needs a rotation scenario, got {config.kind!r}")
    profile = config.rotation or RotationProfile()
    out = []
    for t in config.times():
        yaw, rate = profile.yaw(float(t))
        out.append(_level_sample(config, t, yaw, rate))
    return out


def generate(config: ScenarioConfig, base_dir: Path | None = None) -> list[TrajectorySample]:
    if config.kind == "static":
        return gen_static(config)
    if config.kind == "single_axis_rotation":
        return gen_single_axis_rotation(config)
    path = Path(config.path)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    return load_trajectory(path)


def write_trajectory(samples: Iterable[TrajectorySample], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for s in samples:
            roll, pitch, yaw = cbn_to_euler(np.asarray(s.cbn))
            row = [s.t, *np.degrees([roll, pitch, yaw]), *np.degrees(s.omega_ib_b), *s.f_b,
                   math.degrees(s.lat), math.degrees(s.lon), s.h, *s.v_n]  # fmt: skip
            w.writerow([repr(float(v)) for v in row])


def load_trajectory(path: str | Path) -> list[TrajectorySample]:
    """Read a trajectory CSV; raises :class:`TrajectoryError` with the line number."""
    samples: list[TrajectorySample] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TrajectoryError(f"{path}: empty file")
        if tuple(c.strip() for c in header) != CSV_COLUMNS:
            raise TrajectoryError(f"{path}:1: header must be {','.join(CSV_COLUMNS)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                raise TrajectoryError(f"{path}:{line}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            try:
                v = [float(c) for c in row]
            except ValueError as exc:
                raise TrajectoryError(f"{path}:{line}: {exc}") from None
            if not all(math.isfinite(x) for x in v):
                raise TrajectoryError(f"{path}:{line}: non-finite value")
            t = v[0]
            if samples and not t > samples[-1].t:
                raise TrajectoryError(f"{path}:{line}: time {t} does not increase (previous {samples[-1].t})")
            roll, pitch, yaw = np.radians(v[1:4])
            samples.append(
                TrajectorySample(
                    t=t,
                    cbn=euler_to_cbn(roll, pitch, yaw),
                    omega_ib_b=np.radians(v[4:7]),
                    f_b=np.array(v[7:10]),
                    lat=math.radians(v[10]),
                    lon=math.radians(v[11]),
                    h=v[12],
                    v_n=np.array(v[13:16]),
                )
            )
    if not samples:
        raise TrajectoryError(f"{path}: no data rows")
    return samples
