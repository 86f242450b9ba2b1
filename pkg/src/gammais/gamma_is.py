"""Gamma importance-sampling proposal keyed to the density's behaviour at zero.

For ``f(x) ~ b x**p`` near the origin each summand is drawn from a Gamma
with shape ``p + 1`` and scale ``gamma / (N (p + 1))``, so the proposal mean
per summand is ``gamma / N``. With ``p = 0`` this is the exponential
proposal with rate ``N / gamma``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .distributions import Distribution, PolyAsymptote
from .engine import EstimatorResult, estimate_from_log_weights

__all__ = [
    "Provenance",
    "GammaISParams",
    "gamma_is_params",
    "gamma_log_pdf",
    "log_weight",
    "log_weight_factored",
    "estimate_gamma_is",
    "second_moment_ratio",
]


class Provenance(str, enum.Enum):
    ASYMPTOTE_DERIVED = "asymptote-derived"
    KSTAR_OPTIMIZED = "kstar-optimized"


@dataclass(frozen=True)
class GammaISParams:
    shape: float
    scale: float
    tilt: float
    provenance: Provenance

    @classmethod
    def matched(cls, shape: float, gamma: float, n: int, provenance: Provenance) -> "GammaISParams":
        """Parameters whose per-summand mean is ``gamma / n``."""
        scale = gamma / (n * shape)
        return cls(shape, scale, -1.0 / scale, provenance)

    @property
    def log_normalizer(self) -> float:
        """``log M~(tilt) = log Gamma(shape) - shape * log(-tilt)``."""
        return special.gammaln(self.shape) + self.shape * math.log(self.scale)


def gamma_is_params(asym: PolyAsymptote, gamma: float, n: int) -> GammaISParams:
    if not asym.has_poly_asymptote:
        raise ValueError(
            "density has no polynomial asymptote at zero; for the Log-normal use "
            "lognormal_is.optimal_shape_k"
        )
    if not asym.p > -1:
        raise ValueError("asymptote exponent must exceed -1")
    return GammaISParams.matched(asym.p + 1.0, gamma, n, Provenance.ASYMPTOTE_DERIVED)


def gamma_log_pdf(x, shape: float, scale: float):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return (shape - 1) * np.log(x) - x / scale - special.gammaln(shape) - shape * math.log(scale)


def _check_positive(x_vec):
    x_vec = np.asarray(x_vec, dtype=float)
    if np.any(~(x_vec > 0)):
        raise ValueError("all summands must be > 0")
    return x_vec


def log_weight(d: Distribution, params: GammaISParams, x_vec):
    """``sum_i log f(x_i) - log g(x_i)`` over the last axis, ``g`` the Gamma proposal."""
    x_vec = _check_positive(x_vec)
    lw = d.log_pdf(x_vec) - gamma_log_pdf(x_vec, params.shape, params.scale)
    return np.sum(lw, axis=-1)


def log_weight_factored(d: Distribution, params: GammaISParams, x_vec):
    """Same weight as ``N log M~ + sum_i [log f(x_i) - tilt x_i - p log x_i]``."""
    x_vec = _check_positive(x_vec)
    n = x_vec.shape[-1]
    p = params.shape - 1.0
    terms = d.log_pdf(x_vec) - params.tilt * x_vec - p * np.log(x_vec)
    return n * params.log_normalizer + np.sum(terms, axis=-1)


def estimate_gamma_is(
    d: Distribution,
    gamma: float,
    n: int,
    m: int,
    seed: int = 0,
    *,
    params: Optional[GammaISParams] = None,
    workers: Optional[int] = None,
) -> EstimatorResult:
    """Unbiased Gamma-IS estimate of ``P(X_1 + ... + X_N <= gamma)``."""
    if params is None:
        params = gamma_is_params(d.poly_asymptote(), gamma, n)
    shape, scale = params.shape, params.scale

    def log_weights(rng, size):
        x = rng.gamma(shape, scale, (size, n))
        # a Gamma draw can underflow to exactly 0 for small shapes
        x = np.maximum(x, np.finfo(float).tiny)
        lw = np.sum(d.log_pdf(x) - gamma_log_pdf(x, shape, scale), axis=1)
        return np.where(x.sum(axis=1) <= gamma, lw, -np.inf)

    return estimate_from_log_weights(log_weights, m, seed, workers)


def second_moment_ratio(
    d: Distribution, gamma: float, n: int, m: int, seed: int = 0, *, workers=None
) -> float:
    """Empirical ``A1/A2``: second moment of Gamma-IS over that of exponential twisting."""
    from .twisting import estimate_exp_twist

    a1 = estimate_gamma_is(d, gamma, n, m, seed, workers=workers).second_moment
    a2 = estimate_exp_twist(d, gamma, n, m, seed + 1, workers=workers).second_moment
    return a1 / a2
