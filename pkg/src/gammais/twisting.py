"""Exponential twisting: MGF, tilt solve, tilted sampling and the twisted estimator.

The tilted density ``f(x) exp(theta x) / M(theta)`` is sampled by
acceptance-rejection against a Gamma proposal with scale ``-1/theta``. For
a density ``f(x) = x**p g(x)`` the proposal shape is ``p + 1`` and the
acceptance ratio is proportional to ``g(x)``, independent of ``theta``;
for the Log-normal the shape is the optimized ``k*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from . import numerics
from .distributions import Distribution, Exponential, Family, Gamma
from .engine import EstimatorResult, simulate

__all__ = [
    "TiltRegimeError",
    "EnvelopeViolationError",
    "TiltSolution",
    "ARReport",
    "TiltedSampler",
    "mgf",
    "mgf_derivative",
    "tilted_mean",
    "solve_tilt",
    "sample_tilted",
    "estimate_exp_twist",
    "run_exp_twist",
]

THETA_FLOOR = -1e12
ENVELOPE_POINTS = 4096
ENVELOPE_SAFETY = 1.05


class TiltRegimeError(ValueError):
    pass


class EnvelopeViolationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TiltSolution:
    theta: float
    normalizer: float
    residual: float
    mean_under_tilt: float
    target_mean: float

    @property
    def log_normalizer(self) -> float:
        return math.log(self.normalizer)


@dataclass
class ARReport:
    proposals: int = 0
    accepts: int = 0
    envelope_constant: float = math.nan

    @property
    def acceptance_rate(self) -> float:
        return self.accepts / self.proposals if self.proposals else math.nan

    def __add__(self, other: "ARReport") -> "ARReport":
        env = max(self.envelope_constant, other.envelope_constant)
        if math.isnan(self.envelope_constant):
            env = other.envelope_constant
        elif math.isnan(other.envelope_constant):
            env = self.envelope_constant
        return ARReport(self.proposals + other.proposals, self.accepts + other.accepts, env)


# ---------------------------------------------------------------------------
# MGF


def _integrand_scale(d: Distribution, theta: float) -> float:
    """Location of the peak of ``x f(x) exp(theta x)`` on a coarse log grid."""
    s = d._scale
    if theta == 0:
        return s
    x = s * np.geomspace(1e-15, 1e3, 400)
    with np.errstate(all="ignore"):
        log_g = d.log_pdf(x) + theta * x + np.log(x)
    return float(x[np.nanargmax(log_g)])


def _mgf_pair(d: Distribution, theta: float) -> tuple[float, float]:
    if theta > 0:
        raise ValueError("only theta <= 0 is supported")
    if isinstance(d, Exponential):
        k = d.k
        return k / (k - theta), k / (k - theta) ** 2
    if isinstance(d, Gamma):
        k, beta = d.k, d.beta
        base = 1.0 - beta * theta
        return base**-k, k * beta * base ** (-k - 1)
    scale = _integrand_scale(d, theta)

    def weight(x):
        return np.exp(d.log_pdf(x) + theta * x)

    m0 = numerics.integrate_semi_infinite(weight, tol=1e-300, rtol=1e-13, scale=scale)
    m1 = numerics.integrate_semi_infinite(lambda x: x * weight(x), tol=1e-300, rtol=1e-13, scale=scale)
    return m0.value, m1.value


def mgf(d: Distribution, theta: float) -> float:
    """``M(theta) = E[exp(theta X)]`` for ``theta <= 0``."""
    if theta == 0:
        return 1.0
    return _mgf_pair(d, theta)[0]


def mgf_derivative(d: Distribution, theta: float) -> float:
    return _mgf_pair(d, theta)[1]


def tilted_mean(d: Distribution, theta: float) -> float:
    m0, m1 = _mgf_pair(d, theta)
    return m1 / m0


def solve_tilt(d: Distribution, gamma: float, n: int) -> TiltSolution:
    """Solve ``M'(theta)/M(theta) = gamma/N`` for ``theta < 0``."""
    target = gamma / n
    mean = d.mean
    if not target < mean:
        raise TiltRegimeError(
            f"gamma/N = {target:g} is not below E[X] = {mean:g}; the tilt would be nonnegative"
        )
    lo = -1.0
    while tilted_mean(d, lo) >= target:
        lo *= 2.0
        if lo < THETA_FLOOR:
            raise TiltRegimeError("tilt equation is numerically degenerate (theta below -1e12)")
    hi = lo / 2.0 if lo < -1.0 else 0.0
    res = numerics.find_root_bracketed(
        lambda t: tilted_mean(d, t) - target, lo, hi, tol=1e-13 * abs(lo)
    )
    theta = res.root
    m0, m1 = _mgf_pair(d, theta)
    return TiltSolution(theta, m0, m1 / m0 - target, m1 / m0, target)


# ---------------------------------------------------------------------------
# acceptance-rejection


def _gamma_log_pdf(x, shape, scale):
    with np.errstate(divide="ignore"):
        return (shape - 1) * np.log(x) - x / scale - special.gammaln(shape) - shape * math.log(scale)


class TiltedSampler:
    """Acceptance-rejection sampler for the tilted density of ``d``."""

    def __init__(self, d: Distribution, tilt: TiltSolution):
        if tilt.theta >= 0:
            raise TiltRegimeError("tilted sampling needs theta < 0")
        asym = d.poly_asymptote()
        if asym.has_poly_asymptote:
            shape = asym.p + 1
        elif d.family is Family.LOGNORMAL:
            from .lognormal_is import optimal_shape_k

            shape = optimal_shape_k(1, tilt.target_mean)
        else:
            raise TiltRegimeError(f"no proposal envelope for {d.family.value}")
        self.d = d
        self.tilt = tilt
        self.shape = shape
        self.scale = -1.0 / tilt.theta
        lo, hi = special.gammaincinv(shape, [1e-12, 1 - 1e-12]) * self.scale
        grid = np.geomspace(lo, hi, ENVELOPE_POINTS)
        log_sup = float(np.max(self.log_ratio(grid)))
        if asym.has_poly_asymptote:
            # limit of the ratio at 0+: b * Gamma(p+1) * scale**(p+1) / M
            at_zero = (
                math.log(asym.b) + special.gammaln(shape) + shape * math.log(self.scale)
                - tilt.log_normalizer
            )
            log_sup = max(log_sup, at_zero)
        self.log_envelope = log_sup + math.log(ENVELOPE_SAFETY)

    @property
    def envelope_constant(self) -> float:
        return math.exp(self.log_envelope)

    def log_ratio(self, x):
        """``log`` of tilted density over proposal density."""
        t = self.tilt
        with np.errstate(divide="ignore", invalid="ignore"):
            return (
                self.d.log_pdf(x) + t.theta * x - t.log_normalizer
                - _gamma_log_pdf(x, self.shape, self.scale)
            )

    def draw(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, ARReport]:
        log_env = self.log_envelope
        for attempt in range(2):
            out = np.empty(size)
            filled = 0
            report = ARReport(envelope_constant=math.exp(log_env))
            rate = min(1.0, 1.0 / math.exp(log_env))
            violated = False
            while filled < size:
                batch = int((size - filled) / max(rate, 1e-3) * 1.1) + 16
                x = rng.gamma(self.shape, self.scale, batch)
                lr = self.log_ratio(x)
                if np.any(lr > log_env):
                    # one re-estimation from the observed ratios, then restart
                    if attempt == 1:
                        raise EnvelopeViolationError(
                            f"density ratio {math.exp(lr.max()):.6g} exceeds envelope {math.exp(log_env):.6g}"
                        )
                    log_env = float(lr.max()) + math.log(ENVELOPE_SAFETY)
                    violated = True
                    break
                accept = np.log(rng.random(batch)) < lr - log_env
                kept = x[accept]
                report.proposals += batch
                report.accepts += kept.size
                take = min(kept.size, size - filled)
                out[filled : filled + take] = kept[:take]
                filled += take
                rate = max(report.accepts, 1) / report.proposals
            if not violated:
                return out, report
        raise AssertionError("unreachable")


def sample_tilted(d: Distribution, tilt: TiltSolution, rng: np.random.Generator, size: int = 1):
    """Exact draws from the tilted density, with the acceptance-rejection report."""
    return TiltedSampler(d, tilt).draw(rng, size)


# ---------------------------------------------------------------------------
# estimator


def run_exp_twist(
    d: Distribution, gamma: float, n: int, m: int, seed: int = 0, *, workers: Optional[int] = None
) -> tuple[EstimatorResult, TiltSolution, ARReport]:
    tilt = solve_tilt(d, gamma, n)
    sampler = TiltedSampler(d, tilt)
    log_norm_n = n * tilt.log_normalizer
    theta = tilt.theta

    def log_weights(rng, size):
        x, report = sampler.draw(rng, size * n)
        s = x.reshape(size, n).sum(axis=1)
        return np.where(s <= gamma, log_norm_n - theta * s, -np.inf), report

    mom, wall, reports = simulate(log_weights, m, seed, workers)
    total = ARReport()
    for rep in reports:
        total = total + rep
    return EstimatorResult.from_moments(mom, seed=seed, wall_seconds=wall), tilt, total


def estimate_exp_twist(d: Distribution, gamma: float, n: int, m: int, seed: int = 0, *, workers=None):
    """Exponential-twisting IS estimate of ``P(X_1 + ... + X_N <= gamma)``."""
    return run_exp_twist(d, gamma, n, m, seed, workers=workers)[0]
