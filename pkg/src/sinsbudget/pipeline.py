"""Run budgets and Monte-Carlo checks for a SINS scenario."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import NDArray

from .decomposition import (
    BudgetReport,
    DecomposedCovariance,
    SourcePartition,
    extract_budget,
    init_decomposed_cov,
    recompose,
    step_decomposed_cov,
)
from .montecarlo import EnsembleResult, simulate_ensemble
from .scenario import Scenario
from .sins_model import Earth, ImuSpec, SinsErrorModel, TrajectorySample
from .statespace import DiscreteStep, discretize_groups, propagate_cov
from .trajectory import generate

ARCSEC = math.pi / 180.0 / 3600.0


@dataclass(frozen=True)
class Output:
    """A reported navigation error component."""

    label: str
    index: int
    cls: str  # attitude | velocity | position
    unit: str

    def scale(self, sample: TrajectorySample, earth: Earth) -> float:
        if self.unit == "arcsec":
            return 1.0 / ARCSEC
        if self.label == "dL":
            return earth.radii(sample.lat)[0] + sample.h
        if self.label == "dlambda":
            return (earth.radii(sample.lat)[1] + sample.h) * math.cos(sample.lat)
        return 1.0


HORIZONTAL_OUTPUTS = (
    Output("phi_E", 0, "attitude", "arcsec"),
    Output("phi_N", 1, "attitude", "arcsec"),
    Output("phi_U", 2, "attitude", "arcsec"),
    Output("dv_E", 3, "velocity", "m/s"),
    Output("dv_N", 4, "velocity", "m/s"),
    Output("dL", 6, "position", "m"),
    Output("dlambda", 7, "position", "m"),
)
VERTICAL_OUTPUTS = (Output("dv_U", 5, "velocity", "m/s"), Output("dh", 8, "position", "m"))


def navigation_outputs(vertical_channel: bool = False) -> list[Output]:
    outs = list(HORIZONTAL_OUTPUTS)
    if vertical_channel:
        outs.insert(5, VERTICAL_OUTPUTS[0])
        outs.append(VERTICAL_OUTPUTS[1])
    return outs


@dataclass
class Setup:
    """Everything derived from a scenario before propagation starts."""

    samples: list[TrajectorySample]
    spec: ImuSpec
    model: SinsErrorModel
    partition: SourcePartition
    P0: NDArray[np.float64]
    outputs: list[Output] = field(default_factory=list)

    @classmethod
    def from_scenario(cls, scenario: Scenario, samples: list[TrajectorySample] | None = None) -> "Setup":
        samples = samples if samples is not None else generate(scenario.config, scenario.base_dir)
        return cls.build(samples, scenario.imu, scenario.run.vertical_channel, scenario.run.partition, scenario.config.earth)

    @classmethod
    def build(
        cls,
        samples: list[TrajectorySample],
        spec: ImuSpec,
        vertical_channel: bool = False,
        granularity: str = "per-axis",
        earth: Earth | None = None,
    ) -> "Setup":
        model = SinsErrorModel(earth or Earth(), vertical_channel)
        s0 = samples[0]
        return cls(
            samples=samples,
            spec=spec,
            model=model,
            partition=model.source_partition(granularity),
            P0=model.initial_covariance(spec, s0.lat, s0.h),
            outputs=navigation_outputs(vertical_channel),
        )

    def steps(self) -> Iterator[DiscreteStep]:
        """Discrete steps between consecutive samples, noise split by group."""
        cm = self.model.continuous_model(self.samples, self.spec)
        groups = self.partition.noise_index_sets()
        for a, b in zip(self.samples[:-1], self.samples[1:]):
            yield discretize_groups(cm, a.t, b.t - a.t, groups)

    def sample_at(self, t: float) -> TrajectorySample:
        times = np.array([s.t for s in self.samples])
        return self.samples[int(np.argmin(np.abs(times - t)))]

    def budget(self, D: DecomposedCovariance) -> BudgetReport:
        sample = self.sample_at(D.t)
        return extract_budget(
            D,
            [(o.label, o.index) for o in self.outputs],
            scales=[o.scale(sample, self.model.earth) for o in self.outputs],
            units=[o.unit for o in self.outputs],
        )


@dataclass
class BudgetRun:
    reports: list[BudgetReport]
    final: DecomposedCovariance
    plain: NDArray[np.float64] | None = None
    max_reconstruction_error: float = 0.0


def _matches(t: float, epochs: Sequence[float]) -> bool:
    return any(abs(t - e) <= 1e-6 * max(1.0, abs(e)) for e in epochs)


def run_budget(setup: Setup, epochs: Sequence[float], check_plain: bool = False) -> BudgetRun:
    """
    Propagate the decomposed covariance across the trajectory, reporting at
    the sample times closest to `epochs`.

    With `check_plain`, the undecomposed covariance is propagated alongside
    and the largest relative Frobenius mismatch is recorded.
    """
    times = [s.t for s in setup.samples]
    targets = sorted({min(times, key=lambda x: abs(x - e)) for e in epochs})
    D = init_decomposed_cov(setup.P0, setup.partition, times[0])
    P = setup.P0.copy() if check_plain else None
    worst = 0.0
    reports = []
    if _matches(D.t, targets):
        reports.append(setup.budget(D))
    for step in setup.steps():
        D = step_decomposed_cov(step, None, D)
        if P is not None:
            P = propagate_cov(step, P)
            worst = max(worst, reconstruction_error(D, P))
        if _matches(D.t, targets):
            reports.append(setup.budget(D))
    return BudgetRun(reports, D, P, worst)


def reconstruction_error(D: DecomposedCovariance, P: NDArray) -> float:
    ref = float(np.linalg.norm(P))
    diff = float(np.linalg.norm(recompose(D) - P))
    return diff / ref if ref > 0.0 else diff


def run_montecarlo(setup: Setup, count: int, seed: int, sources: Sequence[str] | None = None) -> EnsembleResult:
    return simulate_ensemble(setup.steps(), setup.P0, setup.partition, count, seed, sources)
