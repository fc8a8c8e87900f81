"""
Linear time-varying state-space models: discretization and propagation.

Every function here is pure. Covariance outputs are symmetrized after each
update so round-off asymmetry cannot accumulate over long runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, NumericError, PartitionError

MatrixFn = Callable[[float], NDArray[np.float64]]


@dataclass(frozen=True)
class ContinuousModel:
    """
    Continuous-time LTV model ``x' = F(t) x + G(t) w`` with ``E[w w^T] = Qc(t) delta``.

    Parameters
    ----------
    n : int
        State dimension.
    m : int
        Noise dimension.
    F_at, G_at, Qc_at : callable
        Maps from time (s) to the ``n x n`` system matrix, ``n x m`` noise
        distribution matrix and ``m x m`` noise power spectral density.
    """

    n: int
    m: int
    F_at: MatrixFn
    G_at: MatrixFn
    Qc_at: MatrixFn

    def matrices(self, t: float) -> tuple[NDArray, NDArray, NDArray]:
        F = np.asarray(self.F_at(t), dtype=float)
        G = np.asarray(self.G_at(t), dtype=float)
        Qc = np.asarray(self.Qc_at(t), dtype=float)
        if F.shape != (self.n, self.n):
            raise DimensionError(f"F({t}) has shape {F.shape}, expected {(self.n, self.n)}")
        if G.shape != (self.n, self.m):
            raise DimensionError(f"G({t}) has shape {G.shape}, expected {(self.n, self.m)}")
        if Qc.shape != (self.m, self.m):
            raise DimensionError(f"Qc({t}) has shape {Qc.shape}, expected {(self.m, self.m)}")
        for name, M in (("F", F), ("G", G), ("Qc", Qc)):
            if not np.all(np.isfinite(M)):
                raise NumericError(f"{name}({t}) contains non-finite entries")
        return F, G, Qc


@dataclass(frozen=True)
class DiscreteStep:
    """
    One propagation interval ``[t, t + dt]``.

    Attributes
    ----------
    phi : ndarray, shape (n, n)
        State transition matrix.
    qd : ndarray, shape (n, n)
        Discrete process-noise covariance.
    dt : float
        Step length in seconds.
    t : float
        Interval start time in seconds.
    qd_groups : tuple of ndarray, optional
        Per noise-group contributions to ``qd``; filled by
        :func:`discretize_groups`.
    """

    phi: NDArray[np.float64]
    qd: NDArray[np.float64]
    dt: float
    t: float = 0.0
    qd_groups: tuple[NDArray[np.float64], ...] | None = None

    @property
    def n(self) -> int:
        return self.phi.shape[0]


def symmetrize(P: NDArray) -> NDArray:
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def _series_terms(theta: float, tolerance: float) -> int:
    # Taylor remainder after K terms for ||B|| <= theta (< K + 2):
    #   theta^(K+1) / (K+1)! * 1 / (1 - theta / (K+2))
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= theta / k
        if k >= 2 and theta < k + 1:
            bound = term * theta / (k + 1) / (1.0 - theta / (k + 2))
            if bound < tolerance:
                return k
        if k > 60:
            return k


def matrix_exponential(A: ArrayLike, tolerance: float = 1e-16) -> NDArray[np.float64]:
    """
    Matrix exponential by scaling and squaring of a truncated Taylor series.

    The matrix is scaled by ``2**-s`` until its 1-norm is at most 1/2; the
    series is then truncated once the remainder bound falls below
    `tolerance` and the result is squared ``s`` times.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Square matrix.
    tolerance : float, default 1e-16
        Bound on the truncated series remainder (scaled problem).

    Returns
    -------
    ndarray, shape (n, n)
        ``exp(A)``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"matrix_exponential needs a square matrix, got shape {A.shape}")
    if not tolerance > 0.0:
        raise ValueError("tolerance must be positive")
    if not np.all(np.isfinite(A)):
        raise NumericError("matrix_exponential input contains non-finite entries")

    n = A.shape[0]
    norm = float(np.abs(A).sum(axis=0).max()) if n else 0.0
    s = 0
    if norm > 0.5:
        s = int(math.ceil(math.log2(norm / 0.5)))
    B = A / (2.0**s)
    theta = norm / (2.0**s)

    K = _series_terms(theta, tolerance) if theta > 0.0 else 0
    # Horner form: I + B(I + B/2(I + B/3(...)))
    E = np.eye(n)
    for k in range(K, 0, -1):
        E = np.eye(n) + (B @ E) / k
    for _ in range(s):
        E = E @ E
    return E


def discretize(model: ContinuousModel, t: float, dt: float) -> DiscreteStep:
    """
    Discretize `model` over ``[t, t + dt]`` with left-point sampling.

    ``phi = exp(F(t) dt)`` and the process noise uses the trapezoidal rule
    ``qd = dt/2 (phi G Qc G^T phi^T + G Qc G^T)``.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    F, G, Qc = model.matrices(t)
    phi = matrix_exponential(F * dt)
    GQG = G @ Qc @ G.T
    qd = _trapezoid(phi, GQG, dt)
    return DiscreteStep(phi=phi, qd=qd, dt=float(dt), t=float(t))


def discretize_groups(
    model: ContinuousModel,
    t: float,
    dt: float,
    noise_groups: Sequence[Sequence[int]],
) -> DiscreteStep:
    """
    As :func:`discretize`, additionally splitting ``qd`` by noise group.

    Each entry of ``qd_groups`` is the trapezoidal noise covariance with only
    that group's rows/columns of ``Qc`` active. Noise correlated across
    groups is not representable and raises.
    """
    step = discretize(model, t, dt)
    F, G, Qc = model.matrices(t)
    mask_sum = np.zeros_like(Qc)
    parts = []
    for idx in noise_groups:
        idx = np.asarray(idx, dtype=int)
        Qj = np.zeros_like(Qc)
        Qj[np.ix_(idx, idx)] = Qc[np.ix_(idx, idx)]
        mask_sum += Qj
        parts.append(_trapezoid(step.phi, G @ Qj @ G.T, dt))
    if not np.array_equal(mask_sum, Qc):
        raise PartitionError("Qc has cross-group correlation or noise outside every group")
    return DiscreteStep(step.phi, step.qd, step.dt, step.t, tuple(parts))


def _trapezoid(phi: NDArray, GQG: NDArray, dt: float) -> NDArray:
    qd = 0.5 * dt * (phi @ GQG @ phi.T + GQG)
    return symmetrize(qd)


def propagate_cov(step: DiscreteStep, P: ArrayLike) -> NDArray[np.float64]:
    """Return ``phi P phi^T + qd``, symmetrized."""
    P = np.asarray(P, dtype=float)
    if P.shape != step.phi.shape:
        raise DimensionError(f"P has shape {P.shape}, step expects {step.phi.shape}")
    return symmetrize(step.phi @ P @ step.phi.T + step.qd)


def propagate_state(step: DiscreteStep, x: ArrayLike, u_effect: ArrayLike) -> NDArray[np.float64]:
    """Return ``phi x + u_effect`` where `u_effect` is the already distributed input."""
    x = np.asarray(x, dtype=float)
    u_effect = np.asarray(u_effect, dtype=float)
    if x.shape != (step.n,) or u_effect.shape != (step.n,):
        raise DimensionError(
            f"state/input shapes {x.shape}/{u_effect.shape} do not match n={step.n}"
        )
    return step.phi @ x + u_effect
