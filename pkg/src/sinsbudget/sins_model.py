"""
SINS error model in the ENU navigation frame (phi-angle formulation).

State vector (30), zero-based index in brackets::

    [0-2]   phi_E phi_N phi_U             attitude error, rad
    [3-5]   dv_E dv_N dv_U                velocity error, m/s
    [6-8]   dL dlambda dh                 position error, rad rad m
    [9-11]  dKg11 dKg22 dKg33             gyro scale factor
    [12-14] dKg21 dKg31 dKg32             gyro mounting (lower triangle)
    [15-17] dKa11 dKa22 dKa33             accelerometer scale factor
    [18-23] dKa12 dKa13 dKa21 dKa23 dKa31 dKa32   accelerometer mounting
    [24-26] eps_x eps_y eps_z             gyro bias, rad/s
    [27-29] nabla_x nabla_y nabla_z       accelerometer bias, m/s^2

Noise (6): gyro white noise w_g (rad/s) then accelerometer white noise
w_a (m/s^2), both body frame.

Sensor error model: ``w_meas = (I + dKg) w + eps + w_g`` and
``f_meas = (I + dKa) f + nabla + w_a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .decomposition import SourcePartition
from .errors import NumericError, SingularityError
from .statespace import ContinuousModel

N_STATES = 30
N_NOISE = 6

ATT = slice(0, 3)
VEL = slice(3, 6)
POS = slice(6, 9)
KG = slice(9, 15)
KA = slice(15, 24)
EPS = slice(24, 27)
NABLA = slice(27, 30)

STATE_LABELS = (
    "phi_E", "phi_N", "phi_U",
    "dv_E", "dv_N", "dv_U",
    "dL", "dlambda", "dh",
    "dKg11", "dKg22", "dKg33",
    "dKg21", "dKg31", "dKg32",
    "dKa11", "dKa22", "dKa33",
    "dKa12", "dKa13", "dKa21", "dKa23", "dKa31", "dKa32",
    "eps_x", "eps_y", "eps_z",
    "nabla_x", "nabla_y", "nabla_z",
)  # fmt: skip
NOISE_LABELS = ("w_gx", "w_gy", "w_gz", "w_ax", "w_ay", "w_az")

# Table row clusters: (category, state indices), in source-number order.
_CATEGORIES = (
    ("attitude", (0, 1, 2)),
    ("velocity", (3, 4)),
    ("position", (6, 7)),
    ("gyro_sf", (9, 10, 11)),
    ("gyro_mount", (12, 13, 14)),
    ("acc_sf", (15, 16, 17)),
    ("acc_mount", (18, 19, 20, 21, 22, 23)),
    ("gyro_bias", (24, 25, 26)),
    ("acc_bias", (27, 28, 29)),
)
_VERTICAL = ((5, "dv_U"), (8, "dh"))
_NOISE_CATEGORIES = (("gyro_noise", (0, 1, 2)), ("acc_noise", (3, 4, 5)))

POLAR_MARGIN = math.radians(0.1)
ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True)
class Earth:
    """WGS-84 ellipsoid with the simplified gravity ``g0 (1 - 2h/a)``."""

    a: float = 6378137.0
    f: float = 1.0 / 298.257223563
    omega: float = 7.2921151467e-5
    g0: float = 9.80665

    @property
    def e2(self) -> float:
        return self.f * (2.0 - self.f)

    def radii(self, lat: float) -> tuple[float, float]:
        """Meridian and prime-vertical radii of curvature (R_M, R_N)."""
        s2 = math.sin(lat) ** 2
        w = 1.0 - self.e2 * s2
        return self.a * (1.0 - self.e2) / w**1.5, self.a / math.sqrt(w)

    def gravity(self, h: float) -> float:
        return self.g0 * (1.0 - 2.0 * h / self.a)

    def wie_n(self, lat: float) -> NDArray[np.float64]:
        return self.omega * np.array([0.0, math.cos(lat), math.sin(lat)])

    def g_n(self, h: float) -> NDArray[np.float64]:
        return np.array([0.0, 0.0, -self.gravity(h)])


@dataclass(frozen=True)
class ImuSpec:
    """
    One-sigma IMU and initial-navigation error magnitudes, all SI.

    Attitude order is [pitch-like E, roll-like N, yaw U] tilt about the ENU
    axes; `init_pos_err` is [north, east, up] in metres. Noise densities
    `arw` (rad/sqrt(s)) and `vrw` (m/s/sqrt(s)) are per axis.
    """

    sample_rate: float = 100.0
    init_att_err: tuple[float, float, float] = (0.0, 0.0, 0.0)
    init_vel_err: tuple[float, float, float] = (0.0, 0.0, 0.0)
    init_pos_err: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gyro_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    acc_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gyro_sf: tuple[float, float, float] = (0.0, 0.0, 0.0)
    acc_sf: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gyro_mount: tuple[float, float, float] = (0.0, 0.0, 0.0)
    acc_mount: tuple[float, ...] = (0.0,) * 6
    arw: tuple[float, float, float] = (0.0, 0.0, 0.0)
    vrw: tuple[float, float, float] = (0.0, 0.0, 0.0)

    _SIZES = {
        "init_att_err": 3, "init_vel_err": 3, "init_pos_err": 3,
        "gyro_bias": 3, "acc_bias": 3, "gyro_sf": 3, "acc_sf": 3,
        "gyro_mount": 3, "acc_mount": 6, "arw": 3, "vrw": 3,
    }  # fmt: skip

    def __post_init__(self):
        if not self.sample_rate > 0.0:
            raise ValueError("sample_rate must be positive")
        for name, size in self._SIZES.items():
            value = tuple(float(v) for v in np.broadcast_to(getattr(self, name), (size,)))
            if any(not math.isfinite(v) or v < 0.0 for v in value):
                raise ValueError(f"{name} entries must be finite and >= 0 (one-sigma magnitudes)")
            object.__setattr__(self, name, value)

    @classmethod
    def navigation_grade(cls) -> "ImuSpec":
        """Navigation-grade reference unit used by the bundled scenarios."""
        from .units import parse_quantity as q

        return cls(
            sample_rate=q("100 Hz", "Hz"),
            init_att_err=(q("30 arcsec", "rad"), q("30 arcsec", "rad"), q("3 arcmin", "rad")),
            init_vel_err=(q("0.2 m/s", "m/s"), q("0.2 m/s", "m/s"), 0.0),
            init_pos_err=(q("2 m", "m"), q("2 m", "m"), 0.0),
            gyro_bias=q("0.01 deg/h", "rad/s"),
            acc_bias=q("100 ug", "m/s^2"),
            gyro_sf=q("50 ppm", "1"),
            acc_sf=q("50 ppm", "1"),
            gyro_mount=q("5 arcsec", "rad"),
            acc_mount=q("5 arcsec", "rad"),
            arw=q("0.001 deg/sqrt(h)", "rad/sqrt(s)"),
            vrw=q("1 ug/sqrt(Hz)", "m/s/sqrt(s)"),
        )


@dataclass(frozen=True)
class TrajectorySample:
    """Truth navigation state and ideal IMU output at time `t`."""

    t: float
    cbn: NDArray[np.float64]
    omega_ib_b: NDArray[np.float64]
    f_b: NDArray[np.float64]
    lat: float
    lon: float
    h: float
    v_n: NDArray[np.float64] = field(default_factory=lambda: np.zeros(3))

    def check(self) -> None:
        C = np.asarray(self.cbn, dtype=float)
        if C.shape != (3, 3) or float(np.abs(C.T @ C - np.eye(3)).max()) > ORTHONORMAL_TOL:
            raise NumericError(f"cbn at t={self.t} is not orthonormal")


def askew(v: ArrayLike) -> NDArray[np.float64]:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def gyro_kappa_matrix(w: ArrayLike) -> NDArray[np.float64]:
    """``dKg @ w`` as a 3x6 matrix acting on [dKg11 dKg22 dKg33 dKg21 dKg31 dKg32]."""
    wx, wy, wz = w
    return np.array([
        [wx, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, wy, 0.0, wx, 0.0, 0.0],
        [0.0, 0.0, wz, 0.0, wx, wy],
    ])  # fmt: skip


def acc_kappa_matrix(f: ArrayLike) -> NDArray[np.float64]:
    """``dKa @ f`` as a 3x9 matrix acting on [11 22 33 12 13 21 23 31 32]."""
    fx, fy, fz = f
    return np.array([
        [fx, 0.0, 0.0, fy, fz, 0.0, 0.0, 0.0, 0.0],
        [0.0, fy, 0.0, 0.0, 0.0, fx, fz, 0.0, 0.0],
        [0.0, 0.0, fz, 0.0, 0.0, 0.0, 0.0, fx, fy],
    ])  # fmt: skip


@dataclass(frozen=True)
class SinsErrorModel:
    """
    Builder for the 30-state error dynamics.

    With ``vertical_channel=False`` the rows and columns of dv_U and dh are
    zeroed, leaving 28 error sources.
    """

    earth: Earth = field(default_factory=Earth)
    vertical_channel: bool = False

    def _geometry(self, sample: TrajectorySample):
        sample.check()
        lat, h = float(sample.lat), float(sample.h)
        if abs(lat) >= math.pi / 2 - POLAR_MARGIN:
            raise SingularityError(f"build_F: latitude {math.degrees(lat):.4f} deg is too close to a pole (sec L)")
        RM, RN = self.earth.radii(lat)
        return lat, h, RM + h, RN + h

    def build_F(self, sample: TrajectorySample) -> NDArray[np.float64]:
        lat, h, RMh, RNh = self._geometry(sample)
        E = self.earth
        ve, vn, vu = (float(v) for v in sample.v_n)
        sl, cl = math.sin(lat), math.cos(lat)
        tl, secl = sl / cl, 1.0 / cl
        cbn = np.asarray(sample.cbn, dtype=float)

        wie = E.wie_n(lat)
        wen = np.array([-vn / RMh, ve / RNh, ve * tl / RNh])
        win = wie + wen
        fn = cbn @ np.asarray(sample.f_b, dtype=float)
        vn_vec = np.array([ve, vn, vu])

        # d(w_ie)/dpos and d(w_en)/dpos, columns [dL, dlambda, dh]
        Mp1 = np.array([[0.0, 0.0, 0.0], [-E.omega * sl, 0.0, 0.0], [E.omega * cl, 0.0, 0.0]])
        Mp2 = np.array([
            [0.0, 0.0, vn / RMh**2],
            [0.0, 0.0, -ve / RNh**2],
            [ve * secl**2 / RNh, 0.0, -ve * tl / RNh**2],
        ])  # fmt: skip
        Maa = -askew(win)
        Mav = np.array([[0.0, -1.0 / RMh, 0.0], [1.0 / RNh, 0.0, 0.0], [tl / RNh, 0.0, 0.0]])
        Map = Mp1 + Mp2
        Mva = askew(fn)
        Mvv = askew(vn_vec) @ Mav - askew(2.0 * wie + wen)
        Mvp = askew(vn_vec) @ (2.0 * Mp1 + Mp2)
        # gravity magnitude g0 (1 - 2h/a): d g_U / dh feeds the vertical channel
        Mvp[2, 2] += 2.0 * E.g0 / E.a
        Mpv = np.array([[0.0, 1.0 / RMh, 0.0], [secl / RNh, 0.0, 0.0], [0.0, 0.0, 1.0]])
        Mpp = np.array([
            [0.0, 0.0, -vn / RMh**2],
            [ve * secl * tl / RNh, 0.0, -ve * secl / RNh**2],
            [0.0, 0.0, 0.0],
        ])  # fmt: skip

        F = np.zeros((N_STATES, N_STATES))
        F[ATT, ATT] = Maa
        F[ATT, VEL] = Mav
        F[ATT, POS] = Map
        F[ATT, KG] = -cbn @ gyro_kappa_matrix(sample.omega_ib_b)
        F[ATT, EPS] = -cbn
        F[VEL, ATT] = Mva
        F[VEL, VEL] = Mvv
        F[VEL, POS] = Mvp
        F[VEL, KA] = cbn @ acc_kappa_matrix(sample.f_b)
        F[VEL, NABLA] = cbn
        F[POS, VEL] = Mpv
        F[POS, POS] = Mpp
        if not self.vertical_channel:
            F[[5, 8], :] = 0.0
            F[:, [5, 8]] = 0.0
        return F

    def build_G(self, sample: TrajectorySample) -> NDArray[np.float64]:
        sample.check()
        cbn = np.asarray(sample.cbn, dtype=float)
        G = np.zeros((N_STATES, N_NOISE))
        G[ATT, 0:3] = -cbn
        G[VEL, 3:6] = cbn
        if not self.vertical_channel:
            G[5, :] = 0.0
        return G

    def continuous_model(self, samples: Sequence[TrajectorySample], spec: ImuSpec) -> ContinuousModel:
        """LTV model whose matrices at time t come from the latest sample with ``t_k <= t``."""
        times = np.array([s.t for s in samples])
        Qc = noise_psd(spec)
        cache: dict[int, tuple[NDArray, NDArray]] = {}

        def at(t: float) -> int:
            k = int(np.searchsorted(times, t, side="right")) - 1
            return min(max(k, 0), len(samples) - 1)

        def mats(t: float):
            k = at(t)
            if k not in cache:
                cache.clear()
                cache[k] = (self.build_F(samples[k]), self.build_G(samples[k]))
            return cache[k]

        return ContinuousModel(
            n=N_STATES,
            m=N_NOISE,
            F_at=lambda t: mats(t)[0],
            G_at=lambda t: mats(t)[1],
            Qc_at=lambda t: Qc,
        )

    def initial_covariance(self, spec: ImuSpec, lat: float, h: float = 0.0) -> NDArray[np.float64]:
        return initial_covariance(spec, lat, h, self.earth, self.vertical_channel)

    def source_partition(self, granularity: str = "per-axis") -> SourcePartition:
        return source_partition(self.vertical_channel, granularity)


def initial_covariance(
    spec: ImuSpec,
    lat: float,
    h: float = 0.0,
    earth: Earth | None = None,
    vertical_channel: bool = False,
) -> NDArray[np.float64]:
    """
    Diagonal initial covariance: squared one-sigma values in state units.

    Horizontal position errors in metres become radians of latitude and
    longitude at (`lat`, `h`).
    """
    earth = earth or Earth()
    if abs(lat) >= math.pi / 2 - POLAR_MARGIN:
        raise SingularityError("initial_covariance: longitude error undefined near a pole")
    RM, RN = earth.radii(lat)
    north, east, up = spec.init_pos_err
    if not vertical_channel and (spec.init_vel_err[2] != 0.0 or up != 0.0):
        raise ValueError("vertical initial errors given but the vertical channel is disabled")
    sig = np.concatenate([
        spec.init_att_err,
        spec.init_vel_err,
        [north / (RM + h), east / ((RN + h) * math.cos(lat)), up],
        spec.gyro_sf,
        spec.gyro_mount,
        spec.acc_sf,
        spec.acc_mount,
        spec.gyro_bias,
        spec.acc_bias,
    ])  # fmt: skip
    return np.diag(sig**2)


def noise_psd(spec: ImuSpec) -> NDArray[np.float64]:
    """Diagonal white-noise PSD: ARW^2 (rad^2/s) then VRW^2 (m^2/s^3) per axis."""
    return np.diag(np.concatenate([spec.arw, spec.vrw]) ** 2)


def source_partition(vertical_channel: bool = False, granularity: str = "per-axis") -> SourcePartition:
    """
    Error-source grouping in source-number order.

    ``per-axis`` gives one source per scalar error (28 + 6, or 30 + 6 with
    the vertical channel); ``per-category`` one per row cluster (9 + 2, or
    10 + 2). Vertical-channel groups are appended after the 28.
    """
    if granularity == "per-axis":
        initial = [(STATE_LABELS[i], (i,)) for _, idx in _CATEGORIES for i in idx]
        if vertical_channel:
            initial += [(label, (i,)) for i, label in _VERTICAL]
        noise = [(NOISE_LABELS[j], (j,)) for j in range(N_NOISE)]
    elif granularity == "per-category":
        initial = [(name, idx) for name, idx in _CATEGORIES]
        if vertical_channel:
            initial.append(("vertical", tuple(i for i, _ in _VERTICAL)))
        noise = list(_NOISE_CATEGORIES)
    else:
        raise ValueError(f"unknown partition granularity {granularity!r}")
    return SourcePartition(tuple(initial), tuple(noise))


def static_reference(
    phi0: ArrayLike,
    eps_n: ArrayLike,
    lat: float,
    t: float,
    earth: Earth | None = None,
    h_step: float = 0.01,
) -> NDArray[np.float64]:
    """
    Attitude error of a stationary SINS, ``phi' = phi x w_ie - eps``,
    integrated with fixed-step RK4 (step `h_step`, last step shortened).
    """
    w = (earth or Earth()).wie_n(lat)
    eps = np.asarray(eps_n, dtype=float)
    phi = np.array(phi0, dtype=float)
    wx, wy, wz = w
    ex, ey, ez = eps

    def rate(p):
        px, py, pz = p
        return (py * wz - pz * wy - ex, pz * wx - px * wz - ey, px * wy - py * wx - ez)

    p = tuple(phi)
    steps = int(math.floor(t / h_step + 1e-9))
    remaining = t - steps * h_step
    for dt in [h_step] * steps + ([remaining] if remaining > 1e-12 else []):
        k1 = rate(p)
        k2 = rate(tuple(a + 0.5 * dt * b for a, b in zip(p, k1)))
        k3 = rate(tuple(a + 0.5 * dt * b for a, b in zip(p, k2)))
        k4 = rate(tuple(a + dt * b for a, b in zip(p, k3)))
        p = tuple(a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(p, k1, k2, k3, k4))
    return np.array(p)
