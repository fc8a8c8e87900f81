"""
Per-source decomposition of the error state and its covariance.

The total covariance is carried as an ordered family of parts, one per
initial-error group and one per noise group::

    P_k = sum_i Pbar_k(i) + sum_j Qbar_k(j)
    Pbar_{k+1}(i) = phi Pbar_k(i) phi^T
    Qbar_{k+1}(j) = phi Qbar_k(j) phi^T + qd_k(j)

No part ever mixes with another, so the attribution is exact whenever the
initial covariance is diagonal and the noise groups are uncorrelated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import kernels
from .errors import DimensionError, PartitionError, UnsupportedInputError
from .statespace import DiscreteStep, symmetrize

QD_SUM_RTOL = 1e-12
SHARE_FLOOR = 1e-300


@dataclass(frozen=True)
class SourcePartition:
    """
    Ordered assignment of state indices (initial errors) and noise indices
    (stochastic inputs) to labelled sources. Indices are zero-based.
    """

    initial_groups: tuple[tuple[str, tuple[int, ...]], ...]
    noise_groups: tuple[tuple[str, tuple[int, ...]], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "initial_groups", tuple((str(l), tuple(int(i) for i in g)) for l, g in self.initial_groups)
        )
        object.__setattr__(
            self, "noise_groups", tuple((str(l), tuple(int(i) for i in g)) for l, g in self.noise_groups)
        )
        for kind, groups in (("initial", self.initial_groups), ("noise", self.noise_groups)):
            seen: set[int] = set()
            labels: set[str] = set()
            for label, idx in groups:
                if label in labels:
                    raise PartitionError(f"duplicate {kind} group label {label!r}")
                labels.add(label)
                if set(idx) & seen:
                    raise PartitionError(f"{kind} group {label!r} overlaps an earlier group")
                if any(i < 0 for i in idx):
                    raise PartitionError(f"{kind} group {label!r} has a negative index")
                seen.update(idx)

    @property
    def labels(self) -> list[str]:
        """Source labels in storage order: initial groups, then noise groups."""
        return [l for l, _ in self.initial_groups] + [l for l, _ in self.noise_groups]

    def validate(self, n: int, m: int | None = None) -> None:
        for label, idx in self.initial_groups:
            if any(i >= n for i in idx):
                raise PartitionError(f"initial group {label!r} indexes beyond n={n}")
        if m is not None:
            for label, idx in self.noise_groups:
                if any(i >= m for i in idx):
                    raise PartitionError(f"noise group {label!r} indexes beyond m={m}")

    def noise_index_sets(self) -> list[tuple[int, ...]]:
        return [idx for _, idx in self.noise_groups]


@dataclass
class DecomposedState:
    """Deterministic state split into initial-state parts and input parts."""

    xbar_parts: NDArray[np.float64]
    ubar_parts: NDArray[np.float64]

    @classmethod
    def from_initial(cls, x0: ArrayLike, partition: SourcePartition) -> "DecomposedState":
        x0 = np.asarray(x0, dtype=float)
        n = x0.shape[0]
        partition.validate(n)
        xbar = np.zeros((len(partition.initial_groups), n))
        for g, (_, idx) in enumerate(partition.initial_groups):
            xbar[g, list(idx)] = x0[list(idx)]
        uncovered = np.ones(n, dtype=bool)
        for _, idx in partition.initial_groups:
            uncovered[list(idx)] = False
        if np.any(x0[uncovered] != 0.0):
            raise PartitionError("initial state has nonzero entries outside every initial group")
        return cls(xbar, np.zeros((len(partition.noise_groups), n)))

    def recompose(self) -> NDArray[np.float64]:
        return self.xbar_parts.sum(axis=0) + self.ubar_parts.sum(axis=0)


@dataclass
class DecomposedCovariance:
    """
    Covariance parts at epoch `t`.

    ``pbar_parts[i]`` is the covariance carried from initial group ``i``;
    ``qbar_parts[j]`` the covariance accumulated from noise group ``j``.
    """

    pbar_parts: NDArray[np.float64]
    qbar_parts: NDArray[np.float64]
    t: float = 0.0
    labels: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.pbar_parts.shape[-1] if self.pbar_parts.size else self.qbar_parts.shape[-1]

    def parts(self) -> NDArray[np.float64]:
        """All parts stacked in partition order (initial first)."""
        return np.concatenate([self.pbar_parts, self.qbar_parts], axis=0)


@dataclass
class BudgetReport:
    """
    Error budget at one epoch.

    ``sigma[s, o]`` is source ``s``'s standard deviation contribution to
    output ``o`` (output units); ``share[s, o]`` its variance fraction. Per
    output, shares sum to one and per-source sigmas combine by RSS to
    ``total_sigma``.
    """

    epoch: float
    outputs: list[tuple[str, int]]
    sources: list[str]
    sigma: NDArray[np.float64]
    share: NDArray[np.float64]
    total_sigma: NDArray[np.float64]
    units: list[str] = field(default_factory=list)

    def entry(self, source: str, output: str) -> tuple[float, float]:
        s = self.sources.index(source)
        o = [label for label, _ in self.outputs].index(output)
        return float(self.sigma[s, o]), float(self.share[s, o])

    def ranking(self, output: str) -> list[str]:
        """Source labels sorted by descending share for `output`."""
        o = [label for label, _ in self.outputs].index(output)
        order = np.argsort(-self.share[:, o], kind="stable")
        return [self.sources[i] for i in order]


def init_decomposed_cov(P0: ArrayLike, partition: SourcePartition, t: float = 0.0) -> DecomposedCovariance:
    """
    Split a diagonal initial covariance over the initial groups.

    Noise parts start at zero. A nonzero variance on a state that belongs to
    no initial group raises instead of being dropped.
    """
    P0 = np.asarray(P0, dtype=float)
    if P0.ndim != 2 or P0.shape[0] != P0.shape[1]:
        raise DimensionError(f"P0 must be square, got shape {P0.shape}")
    n = P0.shape[0]
    if np.any(P0 - np.diag(np.diag(P0)) != 0.0):
        raise UnsupportedInputError("P0 must be diagonal: off-diagonal covariance has no single owning source")
    d = np.diag(P0)
    if np.any(d < 0.0):
        raise UnsupportedInputError("P0 has negative variances")
    partition.validate(n)

    pbar = np.zeros((len(partition.initial_groups), n, n))
    covered = np.zeros(n, dtype=bool)
    for g, (_, idx) in enumerate(partition.initial_groups):
        idx = list(idx)
        pbar[g, idx, idx] = d[idx]
        covered[idx] = True
    lost = np.flatnonzero(~covered & (d != 0.0))
    if lost.size:
        raise PartitionError(f"P0 has variance at states {lost.tolist()} that belong to no initial group")
    qbar = np.zeros((len(partition.noise_groups), n, n))
    return DecomposedCovariance(pbar, qbar, float(t), partition.labels)


def _check_qd_groups(step: DiscreteStep, qd_per_group: Sequence[ArrayLike], count: int) -> NDArray:
    if len(qd_per_group) != count:
        raise PartitionError(f"got {len(qd_per_group)} noise-group covariances for {count} noise groups")
    if count == 0:
        if np.any(step.qd != 0.0):
            raise PartitionError("step has process noise but the partition has no noise groups")
        return np.zeros((0,) + step.qd.shape)
    q = np.asarray(qd_per_group, dtype=float)
    if q.shape[1:] != step.qd.shape:
        raise DimensionError(f"noise-group covariances have shape {q.shape[1:]}, expected {step.qd.shape}")
    scale = max(float(np.abs(step.qd).max()), float(np.abs(q).max()))
    if scale > 0.0 and float(np.abs(q.sum(axis=0) - step.qd).max()) > QD_SUM_RTOL * scale:
        raise PartitionError("noise-group covariances do not sum to the step's qd")
    return q


def step_decomposed_cov(
    step: DiscreteStep,
    qd_per_group: Sequence[ArrayLike] | None,
    D: DecomposedCovariance,
) -> DecomposedCovariance:
    """
    Advance every part by one step.

    Parameters
    ----------
    step : DiscreteStep
    qd_per_group : sequence of ndarray or None
        ``qd`` restricted to each noise group, in partition order. ``None``
        uses ``step.qd_groups``.
    D : DecomposedCovariance
    """
    if qd_per_group is None:
        if step.qd_groups is None:
            raise PartitionError("step carries no per-group noise and none was supplied")
        qd_per_group = step.qd_groups
    if D.n != step.n:
        raise DimensionError(f"decomposed covariance has n={D.n}, step has n={step.n}")
    q = _check_qd_groups(step, qd_per_group, D.qbar_parts.shape[0])

    # Single batched call: fixed part order keeps the result deterministic.
    stacked = D.parts()
    moved = kernels.congruence_batch(step.phi, stacked) if stacked.shape[0] else stacked
    n_init = D.pbar_parts.shape[0]
    pbar = moved[:n_init]
    qbar = moved[n_init:] + symmetrize(q)
    return DecomposedCovariance(pbar, qbar, D.t + step.dt, D.labels)


def step_decomposed_state(
    step: DiscreteStep,
    u_effect_per_group: Sequence[ArrayLike],
    S: DecomposedState,
) -> DecomposedState:
    """Advance initial-state parts homogeneously and input parts with their own input."""
    if len(u_effect_per_group):
        u = np.asarray(u_effect_per_group, dtype=float).reshape(-1, step.n)
    else:
        u = np.zeros((0, step.n))
    if u.shape[0] != S.ubar_parts.shape[0]:
        raise PartitionError(f"got {u.shape[0]} input effects for {S.ubar_parts.shape[0]} input groups")
    if S.xbar_parts.shape[-1] != step.n:
        raise DimensionError("decomposed state dimension does not match the step")
    xbar = S.xbar_parts @ step.phi.T
    ubar = S.ubar_parts @ step.phi.T + u
    return DecomposedState(xbar, ubar)


def recompose(D: DecomposedCovariance) -> NDArray[np.float64]:
    """Total covariance: elementwise sum of all parts in partition order."""
    total = np.zeros((D.n, D.n))
    for part in D.parts():
        total += part
    return total


def extract_budget(
    D: DecomposedCovariance,
    outputs: Sequence[tuple[str, int]],
    scales: Sequence[float] | None = None,
    units: Sequence[str] | None = None,
) -> BudgetReport:
    """
    Per-source sigma and variance share for selected state components.

    `scales` multiplies each output's sigma (e.g. radians of latitude to
    metres); shares are unit-free and unaffected.
    """
    n = D.n
    for label, index in outputs:
        if not 0 <= index < n:
            raise IndexError(f"output {label!r} index {index} out of range for n={n}")
    idx = np.array([i for _, i in outputs], dtype=int)
    parts = D.parts()
    diag = parts[:, idx, idx]  # (sources, outputs)
    total = recompose(D)[idx, idx]

    share = np.zeros_like(diag)
    ok = total >= SHARE_FLOOR
    share[:, ok] = diag[:, ok] / total[ok]
    scale = np.ones(len(idx)) if scales is None else np.asarray(scales, dtype=float)
    sigma = np.sqrt(np.maximum(diag, 0.0)) * scale
    total_sigma = np.sqrt(np.maximum(total, 0.0)) * scale
    return BudgetReport(
        epoch=D.t,
        outputs=[(str(l), int(i)) for l, i in outputs],
        sources=list(D.labels) or [f"source{k}" for k in range(parts.shape[0])],
        sigma=sigma,
        share=share,
        total_sigma=total_sigma,
        units=list(units) if units is not None else [""] * len(idx),
    )
