"""
sinsbudget
==========

Per-source error budgets for strapdown inertial navigation.

The navigation error covariance is propagated as a family of parts, one
per error source (initial errors, IMU biases, scale factors, mounting
errors, sensor noises), whose sum is the total covariance. Each part's
diagonal gives that source's contribution to every navigation error.
"""

from .decomposition import (
    BudgetReport,
    DecomposedCovariance,
    DecomposedState,
    SourcePartition,
    extract_budget,
    init_decomposed_cov,
    recompose,
    step_decomposed_cov,
    step_decomposed_state,
)
from .kernels import available_backends, backend, use_backend
from .montecarlo import compare_budget, simulate_ensemble
from .sins_model import Earth, ImuSpec, SinsErrorModel, TrajectorySample, source_partition, static_reference
from .statespace import (
    ContinuousModel,
    DiscreteStep,
    discretize,
    discretize_groups,
    matrix_exponential,
    propagate_cov,
    propagate_state,
)
from .trajectory import RotationProfile, ScenarioConfig, gen_single_axis_rotation, gen_static, load_trajectory

__version__ = "0.1.0"
