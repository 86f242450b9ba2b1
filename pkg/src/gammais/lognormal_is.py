"""Estimators for sums of i.i.d. standard Log-normal variables.

Two routes:

* a biased estimator that cuts each summand below ``a = delta*gamma/N``,
  linearizes the truncated density at ``a`` and samples the resulting
  approximately twisted density, a two-component mixture of a shifted
  exponential and a shifted Gamma(2). ``delta`` is picked so the relative
  truncation bias is at most ``epsilon/2``;
* an unbiased Gamma proposal whose shape ``k*`` minimizes a bound on the
  second moment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics
from .distributions import LogNormal
from .engine import EstimatorResult, estimate_from_log_weights
from .gamma_is import GammaISParams, Provenance, estimate_gamma_is

__all__ = [
    "TruncationPlan",
    "TaylorTilt",
    "delta_for_bias",
    "bias_bound_for_cut",
    "approximate_tilt",
    "taylor_tilt",
    "sample_taylor_tilt",
    "estimate_biased_truncated",
    "optimal_shape_k",
    "kstar_params",
    "estimate_gamma_kstar",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_E_INV = math.exp(-1.0)


@dataclass(frozen=True)
class TruncationPlan:
    a: float
    delta: float
    epsilon: float
    bias_bound: float
    gamma: float
    n: int

    def __post_init__(self):
        if not self.a < _E_INV:
            raise ValueError(
                f"truncation point a = {self.a:g} must be below exp(-1) so the linearized "
                "density has positive slope"
            )
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta = {self.delta:g} outside [0, 1)")


@dataclass(frozen=True)
class TaylorTilt:
    theta: float
    f_bar_at_a: float
    f_bar_prime_at_a: float
    normalizer: float
    c: float
    mix_weight_1: float
    mix_weight_2: float
    a: float

    def log_density(self, x):
        """Log of the approximate twisted density; ``x > a``."""
        x = np.asarray(x, dtype=float)
        mass_shift = -self.f_bar_at_a / self.theta + self.f_bar_prime_at_a / self.theta**2
        with np.errstate(divide="ignore"):
            return (
                np.log(self.f_bar_at_a + (x - self.a) * self.f_bar_prime_at_a)
                + self.theta * (x - self.a) - math.log(mass_shift)
            )


def _log_phi_lognormal(x):
    lx = np.log(x)
    return -lx - _LOG_SQRT_2PI - 0.5 * lx * lx


def bias_bound_for_cut(a: float, gamma: float, n: int) -> float:
    """``N Phi(log a) Phi(log gamma)^(N-1) / Phi(log(gamma/N))^N``, in log space."""
    lncdf = numerics.log_std_normal_cdf
    log_val = (
        math.log(n) + lncdf(math.log(a)) + (n - 1) * lncdf(math.log(gamma))
        - n * lncdf(math.log(gamma / n))
    )
    return math.exp(log_val)


def delta_for_bias(epsilon: float, n: int, gamma: float) -> TruncationPlan:
    """Cut ``delta`` keeping the relative truncation bias at ``epsilon/2``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not gamma > 0 or n < 1:
        raise ValueError("need gamma > 0 and n >= 1")
    lncdf = numerics.log_std_normal_cdf
    log_arg = (
        math.log(epsilon / (2 * n)) + n * lncdf(math.log(gamma / n))
        - (n - 1) * lncdf(math.log(gamma))
    )
    log_a = numerics.std_normal_cdf_inv_log(log_arg)
    a = math.exp(log_a)
    if a == 0.0:
        raise ArithmeticError(f"truncation point underflows (log a = {log_a:.6g})")
    delta = a * n / gamma
    return TruncationPlan(a, delta, epsilon, bias_bound_for_cut(a, gamma, n), gamma, n)


def approximate_tilt(f_bar: float, f_bar_prime: float, c: float) -> float:
    """Negative root of the mean condition for the linearized density.

    With ``f_bar_prime = 0`` this is ``-1/c``, the pure shifted exponential.
    """
    bb = f_bar - c * f_bar_prime
    return -(bb + math.sqrt(bb * bb + 8.0 * f_bar * f_bar_prime * c)) / (2.0 * c * f_bar)


def taylor_tilt(plan: TruncationPlan) -> TaylorTilt:
    a = plan.a
    la = math.log(a)
    tail = math.exp(numerics.log_std_normal_cdf(-la))  # P(X > a)
    f_bar = math.exp(float(_log_phi_lognormal(a))) / tail
    f_bar_prime = -f_bar * (1.0 + la) / a
    if not f_bar_prime > 0:
        raise ArithmeticError("truncated density slope at the cut is not positive")
    c = plan.gamma / plan.n - a
    theta = approximate_tilt(f_bar, f_bar_prime, c)
    mass_1 = -f_bar / theta
    mass_2 = f_bar_prime / theta**2
    total = mass_1 + mass_2
    return TaylorTilt(
        theta=theta,
        f_bar_at_a=f_bar,
        f_bar_prime_at_a=f_bar_prime,
        normalizer=math.exp(theta * a) * total,
        c=c,
        mix_weight_1=mass_1 / total,
        mix_weight_2=mass_2 / total,
        a=a,
    )


def sample_taylor_tilt(tilt: TaylorTilt, plan: TruncationPlan, rng: np.random.Generator, size=None):
    """``a`` plus Exponential(rate -theta) or Gamma(2, rate -theta), by mixture weight."""
    scale = -1.0 / tilt.theta
    first = rng.random(size) < tilt.mix_weight_1
    e = rng.exponential(scale, size)
    g = rng.gamma(2.0, scale, size)
    return plan.a + np.where(first, e, g)


def estimate_biased_truncated(
    gamma: float, n: int, epsilon: float, m: int, seed: int = 0, *, workers: Optional[int] = None
) -> EstimatorResult:
    """Estimate of the truncated probability ``alpha_1``; flagged biased with its bound.

    The factor ``(1 - F(a))^N`` times the truncated-density ratio collapses to
    the plain Log-normal density over the proposal density.
    """
    plan = delta_for_bias(epsilon, n, gamma)
    tilt = taylor_tilt(plan)

    def log_weights(rng, size):
        x = sample_taylor_tilt(tilt, plan, rng, (size, n))
        lw = np.sum(_log_phi_lognormal(x) - tilt.log_density(x), axis=1)
        return np.where(x.sum(axis=1) <= gamma, lw, -np.inf)

    return estimate_from_log_weights(
        log_weights, m, seed, workers, biased=True, bias_bound=plan.bias_bound
    )


def optimal_shape_k(n: int, gamma: float) -> float:
    """Minimizer of ``k^2 - 2k log(N/gamma) - log k``."""
    if n < 1 or not gamma > 0:
        raise ValueError("need n >= 1 and gamma > 0")
    ell = math.log(n / gamma)
    return 0.5 * (ell + math.sqrt(ell * ell + 2.0))


def kstar_params(gamma: float, n: int) -> GammaISParams:
    return GammaISParams.matched(optimal_shape_k(n, gamma), gamma, n, Provenance.KSTAR_OPTIMIZED)


def estimate_gamma_kstar(gamma: float, n: int, m: int, seed: int = 0, *, workers=None) -> EstimatorResult:
    """Unbiased Gamma-IS for Log-normal summands with the optimized shape."""
    return estimate_gamma_is(LogNormal(), gamma, n, m, seed, params=kstar_params(gamma, n), workers=workers)
