"""
Monte-Carlo ensemble of the discrete error system, used as an independent
check of the covariance decomposition.

One ensemble runs with every source active; one further ensemble per source
runs with only that source's initial variance or noise active. Each
ensemble draws from its own random stream, derived from
``(seed, source index)``; within an ensemble, row ``r`` of every draw
belongs to run ``r``. Streams therefore do not depend on which other
sources are simulated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from . import kernels
from .decomposition import DecomposedCovariance, SourcePartition
from .errors import NumericError, PartitionError, UnsupportedInputError
from .statespace import DiscreteStep

PSD_RTOL = 1e-10
TOTAL = "total"


@dataclass
class EnsembleResult:
    """Unbiased sample covariances at the final epoch."""

    count: int
    seed: int
    epoch: float
    total: NDArray[np.float64]
    per_source: dict[str, NDArray[np.float64]]


@dataclass
class ComparisonRow:
    output: str
    source: str
    analytic_var: float
    mc_var: float
    ratio: float
    lower: float
    upper: float
    status: str  # "pass", "fail" or "degenerate"

    @property
    def passed(self) -> bool:
        return self.status != "fail"


@dataclass
class ComparisonReport:
    count: int
    confidence: float
    rows: list[ComparisonRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failures(self) -> list[ComparisonRow]:
        return [r for r in self.rows if r.status == "fail"]

    @property
    def wide_intervals(self) -> bool:
        """True when N is too small for the chi-square interval to be informative."""
        return self.count < 30


def noise_factor(q: ArrayLike) -> NDArray[np.float64]:
    """Return L with ``L @ L.T == q`` for symmetric PSD q (columns of zero variance dropped)."""
    q = np.asarray(q, dtype=float)
    if not np.any(q):
        return np.zeros((q.shape[0], 0))
    w, V = np.linalg.eigh(0.5 * (q + q.T))
    tol = PSD_RTOL * max(float(np.trace(q)), float(np.abs(w).max()))
    if w.min() < -tol:
        raise NumericError(f"process noise covariance is not PSD (min eigenvalue {w.min():.3e})")
    keep = w > tol * 1e-6
    return V[:, keep] * np.sqrt(w[keep])


def _stream(seed: int, source_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(source_index,))))


def simulate_ensemble(
    steps: Iterable[DiscreteStep],
    P0: ArrayLike,
    partition: SourcePartition,
    count: int,
    seed: int,
    sources: Sequence[str] | None = None,
) -> EnsembleResult:
    """
    Propagate ``x_{k+1} = phi_k x_k + w_k`` for every ensemble.

    Parameters
    ----------
    steps : iterable of DiscreteStep
        Each step must carry ``qd_groups`` in noise-group order.
    P0 : array_like
        Diagonal initial covariance.
    partition : SourcePartition
    count : int
        Runs per ensemble, at least 2.
    seed : int
    sources : sequence of str, optional
        Per-source ensembles to run (labels from `partition`); default all.
        The all-sources ensemble is always run and stored under ``"total"``.
    """
    if count < 2:
        raise ValueError("need at least 2 runs for a sample covariance")
    P0 = np.asarray(P0, dtype=float)
    if np.any(P0 - np.diag(np.diag(P0))):
        raise UnsupportedInputError("P0 must be diagonal")
    n = P0.shape[0]
    partition.validate(n)
    labels = partition.labels
    wanted = labels if sources is None else list(sources)
    for s in wanted:
        if s not in labels:
            raise PartitionError(f"unknown source {s!r}")
    n_init = len(partition.initial_groups)
    sd0 = np.sqrt(np.diag(P0))

    # ensemble e = 0 is the total run; e >= 1 follow `wanted`
    ens_sources = [None] + [labels.index(s) for s in wanted]
    rngs = [_stream(seed, 0)] + [_stream(seed, 1 + k) for k in ens_sources[1:]]
    X = np.zeros((len(ens_sources), count, n))
    for e, src in enumerate(ens_sources):
        if src is None:
            X[e] = rngs[e].standard_normal((count, n)) * sd0
        elif src < n_init:
            idx = list(partition.initial_groups[src][1])
            X[e][:, idx] = rngs[e].standard_normal((count, len(idx))) * sd0[idx]

    noisy = [(e, src - n_init) for e, src in enumerate(ens_sources) if src is not None and src >= n_init]
    epoch = 0.0
    for step in steps:
        if step.qd_groups is None or len(step.qd_groups) != len(partition.noise_groups):
            raise PartitionError("every step needs qd_groups matching the noise groups")
        factors = [noise_factor(q) for q in step.qd_groups]
        kernels.transition_batch(step.phi, X.reshape(-1, n), inplace=True)
        for L in factors:
            if L.shape[1]:
                X[0] += rngs[0].standard_normal((count, L.shape[1])) @ L.T
        for e, j in noisy:
            L = factors[j]
            if L.shape[1]:
                X[e] += rngs[e].standard_normal((count, L.shape[1])) @ L.T
        epoch = step.t + step.dt

    covs = [np.atleast_2d(np.cov(X[e], rowvar=False, ddof=1)) for e in range(len(ens_sources))]
    per_source = {labels[src]: covs[e] for e, src in enumerate(ens_sources) if src is not None}
    return EnsembleResult(count=count, seed=seed, epoch=epoch, total=covs[0], per_source=per_source)


def chi2_interval(variance: float, count: int, confidence: float = 0.99) -> tuple[float, float]:
    """Two-sided interval for the true variance given a sample variance from `count` runs."""
    dof = count - 1
    alpha = 1.0 - confidence
    lo = dof * variance / stats.chi2.ppf(1.0 - alpha / 2.0, dof)
    hi = dof * variance / stats.chi2.ppf(alpha / 2.0, dof)
    return lo, hi


def compare_budget(
    mc: EnsembleResult,
    D: DecomposedCovariance,
    outputs: Sequence[tuple[str, int]],
    confidence: float = 0.99,
) -> ComparisonReport:
    """
    Check each per-source analytic variance against the Monte-Carlo
    chi-square interval. Outputs where both are zero are marked degenerate.
    """
    parts = D.parts()
    rows = []
    for label, index in outputs:
        for s, source in enumerate(D.labels):
            if source not in mc.per_source:
                continue
            analytic = float(parts[s, index, index])
            sample = float(mc.per_source[source][index, index])
            scale = max(abs(analytic), abs(sample))
            if scale == 0.0 or (sample <= 0.0 and analytic <= 1e-300):
                rows.append(ComparisonRow(label, source, analytic, sample, float("nan"), 0.0, 0.0, "degenerate"))
                continue
            lo, hi = chi2_interval(sample, mc.count, confidence)
            ratio = analytic / sample if sample > 0.0 else float("inf")
            status = "pass" if lo <= analytic <= hi else "fail"
            rows.append(ComparisonRow(label, source, analytic, sample, ratio, lo, hi, status))
    return ComparisonReport(mc.count, confidence, rows)
