"""Importance sampling for the left tail of sums of i.i.d. nonnegative variables."""

from .distributions import (
    DistributionSpec,
    DistributionValidationError,
    Family,
    PolyAsymptote,
    make_distribution,
)
from .engine import (
    EstimatorResult,
    ExperimentPlan,
    OracleResult,
    Sweep,
    convolution_oracle,
    estimate_naive,
    estimate_truncation,
    recommended_samples,
    run,
)
from .gamma_is import GammaISParams, estimate_gamma_is, gamma_is_params
from .lognormal_is import delta_for_bias, estimate_biased_truncated, estimate_gamma_kstar, optimal_shape_k
from .twisting import estimate_exp_twist, solve_tilt

__version__ = "0.1.0"
