"""Nonnegative summand distributions.

Each family exposes a log-density, CDF, exact sampler and the polynomial
behaviour of its density at the origin, ``f(x) ~ b x**p`` as ``x -> 0+``,
which is what the Gamma importance-sampling proposal is built from.

Rice, Gamma-Gamma and kappa-mu have no closed-form CDF; theirs is tabulated
once per object by quadrature on a geometric grid and refined locally with a
16-point Gauss-Legendre rule.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from . import numerics

__all__ = [
    "Family",
    "DistributionSpec",
    "DistributionValidationError",
    "TruncationUnderflowError",
    "PolyAsymptote",
    "Distribution",
    "make_distribution",
    "conditional_scaled_quantile",
    "conditional_scaled_sampler",
]


class Family(str, enum.Enum):
    EXPONENTIAL = "exponential"
    GAMMA = "gamma"
    WEIBULL = "weibull"
    NAKAGAMI_M = "nakagami"
    GENERALIZED_GAMMA = "generalized-gamma"
    RICE = "rice"
    GAMMA_GAMMA = "gamma-gamma"
    KAPPA_MU = "kappa-mu"
    LOGNORMAL = "lognormal"

    @classmethod
    def parse(cls, name: str) -> "Family":
        key = name.strip().lower().replace("_", "-")
        key = _FAMILY_ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise DistributionValidationError([f"unknown family {name!r} (expected one of {valid})"])


_FAMILY_ALIASES = {
    "exp": "exponential",
    "nakagami-m": "nakagami",
    "gengamma": "generalized-gamma",
    "ggamma": "generalized-gamma",
    "rician": "rice",
    "gammagamma": "gamma-gamma",
    "kappamu": "kappa-mu",
    "κ-μ": "kappa-mu",
    "log-normal": "lognormal",
}


class DistributionValidationError(ValueError):
    """Raised with every violated parameter constraint listed in ``problems``."""

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class TruncationUnderflowError(ArithmeticError):
    pass


@dataclass(frozen=True)
class DistributionSpec:
    family: Family
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family.parse(str(self.family)))
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})

    def to_dict(self) -> dict:
        return {"family": self.family.value, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "DistributionSpec":
        return cls(Family.parse(data["family"]), dict(data.get("params", {})))


@dataclass(frozen=True)
class PolyAsymptote:
    p: float
    b: float
    has_poly_asymptote: bool = True


_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# 16-point Gauss-Legendre on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class Distribution:
    """Base class. Subclasses set ``family``, ``param_names`` and the math."""

    family: Family
    param_names: tuple[str, ...] = ()
    defaults: Mapping[str, float] = {}

    def __init__(self, **params: float):
        problems = []
        values = dict(self.defaults)
        for key, val in params.items():
            if key not in self.param_names:
                problems.append(f"{self.family.value}: unknown parameter {key!r}")
            else:
                values[key] = float(val)
        for key in self.param_names:
            if key not in values:
                problems.append(f"{self.family.value}: missing parameter {key!r}")
            elif not math.isfinite(values[key]):
                problems.append(f"{self.family.value}: {key} must be finite")
        if not problems:
            problems.extend(self._validate(values))
        if problems:
            raise DistributionValidationError(problems)
        self._params = values
        self._cache: dict = {}

    def _validate(self, v: Mapping[str, float]) -> list[str]:
        return [
            f"{self.family.value}: {k} must be > 0 (got {v[k]})"
            for k in self.param_names
            if not v[k] > 0
        ]

    def __setattr__(self, name, value):
        if name in ("_params", "_cache") and name not in self.__dict__:
            object.__setattr__(self, name, value)
        else:
            raise AttributeError(f"{type(self).__name__} is immutable")

    def __getattr__(self, name):
        params = self.__dict__.get("_params", {})
        if name in params:
            return params[name]
        raise AttributeError(name)

    def __repr__(self):
        args = ", ".join(f"{k}={v:g}" for k, v in self._params.items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and self._params == other._params

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self._params.items()))))

    @property
    def params(self) -> dict[str, float]:
        return dict(self._params)

    @property
    def spec(self) -> DistributionSpec:
        return DistributionSpec(self.family, self.params)

    # -- density ----------------------------------------------------------

    def _log_pdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("density evaluated at negative x")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self._log_pdf(x)
        zero = x == 0
        if np.any(zero):
            out = np.where(zero, self._log_pdf_at_zero(), out)
        return float(out) if out.ndim == 0 else out

    def _log_pdf_at_zero(self) -> float:
        asym = self.poly_asymptote()
        if not asym.has_poly_asymptote or asym.p > 0:
            return -math.inf
        if asym.p == 0:
            return math.log(asym.b)
        return math.inf

    def pdf(self, x):
        out = np.exp(self.log_pdf(x))
        return float(out) if np.ndim(out) == 0 else out

    # -- moments, cdf, sampling ------------------------------------------

    @property
    def mean(self) -> float:
        s = self._scale
        res = numerics.integrate_semi_infinite(
            lambda x: x * np.exp(self.log_pdf(x)), scale=s, tol=1e-300, rtol=1e-12
        )
        return res.value

    @property
    def _scale(self) -> float:
        """Width of the bulk of the distribution."""
        return self.mean

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("cdf evaluated at negative x")
        out = np.clip(self._cdf(x), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def _cdf(self, x):
        return _CumulativeTable.for_dist(self).cdf(x)

    def ppf(self, q):
        """Inverse CDF for ``q`` in ``[0, 1)``."""
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q >= 1)):
            raise ValueError("q must lie in [0, 1)")
        out = self._ppf(q)
        return float(out) if out.ndim == 0 else out

    def _ppf(self, q):
        return _CumulativeTable.for_dist(self).ppf(q)

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def poly_asymptote(self) -> PolyAsymptote:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# families


class Exponential(Distribution):
    family = Family.EXPONENTIAL
    param_names = ("k",)

    def _log_pdf(self, x):
        return math.log(self.k) - self.k * x

    def _cdf(self, x):
        return -np.expm1(-self.k * x)

    def _ppf(self, q):
        return -np.log1p(-q) / self.k

    @property
    def mean(self):
        return 1.0 / self.k

    def sample(self, rng, size=None):
        return self._ppf(rng.random(size))

    def poly_asymptote(self):
        return PolyAsymptote(0.0, self.k)


class Gamma(Distribution):
    family = Family.GAMMA
    param_names = ("k", "beta")
    defaults = {"beta": 1.0}

    def _log_pdf(self, x):
        k, beta = self.k, self.beta
        return -k * math.log(beta) - special.gammaln(k) + (k - 1) * np.log(x) - x / beta

    def _cdf(self, x):
        return special.gammainc(self.k, x / self.beta)

    def _ppf(self, q):
        return self.beta * special.gammaincinv(self.k, q)

    @property
    def mean(self):
        return self.k * self.beta

    def sample(self, rng, size=None):
        return rng.gamma(self.k, self.beta, size)

    def poly_asymptote(self):
        return PolyAsymptote(self.k - 1, math.exp(-self.k * math.log(self.beta) - special.gammaln(self.k)))


class Weibull(Distribution):
    family = Family.WEIBULL
    param_names = ("k", "lambda")
    defaults = {"lambda": 1.0}

    @property
    def lam(self):
        return self._params["lambda"]

    def _log_pdf(self, x):
        k, lam = self.k, self.lam
        return math.log(k / lam) + (k - 1) * np.log(x / lam) - (x / lam) ** k

    def _cdf(self, x):
        return -np.expm1(-((x / self.lam) ** self.k))

    def _ppf(self, q):
        return self.lam * (-np.log1p(-q)) ** (1.0 / self.k)

    @property
    def mean(self):
        return self.lam * math.gamma(1.0 + 1.0 / self.k)

    def sample(self, rng, size=None):
        return self._ppf(rng.random(size))

    def poly_asymptote(self):
        return PolyAsymptote(self.k - 1, self.k / self.lam**self.k)


class NakagamiM(Distribution):
    family = Family.NAKAGAMI_M
    param_names = ("m", "omega")
    defaults = {"omega": 1.0}

    def _log_b(self):
        m, om = self.m, self.omega
        return math.log(2.0) + m * math.log(m) - special.gammaln(m) - m * math.log(om)

    def _log_pdf(self, x):
        m, om = self.m, self.omega
        return self._log_b() + (2 * m - 1) * np.log(x) - m * x * x / om

    def _cdf(self, x):
        return special.gammainc(self.m, self.m * x * x / self.omega)

    def _ppf(self, q):
        return np.sqrt(self.omega / self.m * special.gammaincinv(self.m, q))

    @property
    def mean(self):
        m = self.m
        return math.exp(special.gammaln(m + 0.5) - special.gammaln(m)) * math.sqrt(self.omega / m)

    def sample(self, rng, size=None):
        return np.sqrt(rng.gamma(self.m, self.omega / self.m, size))

    def poly_asymptote(self):
        return PolyAsymptote(2 * self.m - 1, math.exp(self._log_b()))


class GeneralizedGamma(Distribution):
    """Stacy's generalized Gamma, ``(p/a^d)/Gamma(d/p) x^(d-1) exp(-(x/a)^p)``."""

    family = Family.GENERALIZED_GAMMA
    param_names = ("a", "d", "p")

    def _log_b(self):
        a, d, p = self.a, self.d, self.p
        return math.log(p) - d * math.log(a) - special.gammaln(d / p)

    def _log_pdf(self, x):
        return self._log_b() + (self.d - 1) * np.log(x) - (x / self.a) ** self.p

    def _cdf(self, x):
        return special.gammainc(self.d / self.p, (x / self.a) ** self.p)

    def _ppf(self, q):
        return self.a * special.gammaincinv(self.d / self.p, q) ** (1.0 / self.p)

    @property
    def mean(self):
        a, d, p = self.a, self.d, self.p
        return a * math.exp(special.gammaln((d + 1) / p) - special.gammaln(d / p))

    def sample(self, rng, size=None):
        return self.a * rng.gamma(self.d / self.p, 1.0, size) ** (1.0 / self.p)

    def poly_asymptote(self):
        return PolyAsymptote(self.d - 1, math.exp(self._log_b()))


class Rice(Distribution):
    family = Family.RICE
    param_names = ("sigma", "nu")
    defaults = {"sigma": 1.0}

    def _validate(self, v):
        # nu = 0 reduces to Rayleigh
        problems = []
        if not v["sigma"] > 0:
            problems.append(f"rice: sigma must be > 0 (got {v['sigma']})")
        if not v["nu"] >= 0:
            problems.append(f"rice: nu must be >= 0 (got {v['nu']})")
        return problems

    def _log_pdf(self, x):
        s2 = self.sigma**2
        return (
            np.log(x) - math.log(s2) - (x * x + self.nu**2) / (2 * s2)
            + numerics.log_bessel_i(0, x * self.nu / s2)
        )

    @property
    def _scale(self):
        return math.sqrt(self.nu**2 + 2 * self.sigma**2)

    def sample(self, rng, size=None):
        z1 = rng.standard_normal(size)
        z2 = rng.standard_normal(size)
        return np.sqrt((self.sigma * z1 + self.nu) ** 2 + (self.sigma * z2) ** 2)

    def poly_asymptote(self):
        s2 = self.sigma**2
        return PolyAsymptote(1.0, math.exp(-self.nu**2 / (2 * s2)) / s2)


class GammaGamma(Distribution):
    family = Family.GAMMA_GAMMA
    param_names = ("k", "m", "omega")
    defaults = {"omega": 1.0}

    def _validate(self, v):
        problems = super()._validate(v)
        if problems:
            return problems
        k, m = v["k"], v["m"]
        if not m > k:
            problems.append(f"gamma-gamma: requires m > k (got k={k}, m={m})")
        elif abs((m - k) - round(m - k)) < 1e-9:
            problems.append(f"gamma-gamma: m - k must not be a positive integer (got {m - k:g})")
        return problems

    def _log_pdf(self, x):
        k, m, om = self.k, self.m, self.omega
        h = 0.5 * (k + m)
        return (
            math.log(2.0) + h * math.log(k * m) - special.gammaln(k) - special.gammaln(m)
            - math.log(om) + (h - 1) * np.log(x / om)
            + numerics.log_bessel_k(k - m, 2.0 * np.sqrt(k * m * x / om))
        )

    @property
    def mean(self):
        return self.omega

    @property
    def _scale(self):
        return self.omega

    def sample(self, rng, size=None):
        # product of two unit-mean Gamma variates
        k, m = self.k, self.m
        return self.omega * rng.gamma(k, 1.0 / k, size) * rng.gamma(m, 1.0 / m, size)

    def poly_asymptote(self):
        k, m, om = self.k, self.m, self.omega
        log_b = (
            special.gammaln(m - k) + k * math.log(k * m)
            - special.gammaln(k) - special.gammaln(m) - k * math.log(om)
        )
        return PolyAsymptote(k - 1, math.exp(log_b))


class KappaMu(Distribution):
    family = Family.KAPPA_MU
    param_names = ("kappa", "mu", "omega")
    defaults = {"omega": 1.0}

    def _log_pdf(self, x):
        ka, mu, om = self.kappa, self.mu, self.omega
        log_c = (
            math.log(2 * mu) + 0.5 * (mu + 1) * math.log1p(ka) - 0.5 * (mu + 1) * math.log(om)
            - 0.5 * (mu - 1) * math.log(ka) - mu * ka
        )
        z = 2 * mu * math.sqrt(ka * (ka + 1) / om) * x
        return log_c + mu * np.log(x) - (1 + ka) * mu * x * x / om + numerics.log_bessel_i(mu - 1, z)

    @property
    def _scale(self):
        return math.sqrt(self.omega)

    def sample(self, rng, size=None):
        # R^2 / sigma^2 is noncentral chi-square with 2 mu degrees of freedom
        ka, mu, om = self.kappa, self.mu, self.omega
        sigma2 = om / (2 * mu * (1 + ka))
        return np.sqrt(sigma2 * rng.noncentral_chisquare(2 * mu, 2 * mu * ka, size))

    def poly_asymptote(self):
        ka, mu, om = self.kappa, self.mu, self.omega
        log_b = (
            math.log(2.0) + mu * math.log(mu) + mu * math.log1p(ka) - mu * math.log(om)
            - mu * ka - special.gammaln(mu)
        )
        return PolyAsymptote(2 * mu - 1, math.exp(log_b))


class LogNormal(Distribution):
    """Standard Log-normal (underlying normal has mean 0, variance 1)."""

    family = Family.LOGNORMAL

    def _log_pdf(self, x):
        lx = np.log(x)
        return -lx - _LOG_SQRT_2PI - 0.5 * lx * lx

    def _cdf(self, x):
        with np.errstate(divide="ignore"):
            return special.ndtr(np.log(x))

    def _ppf(self, q):
        with np.errstate(divide="ignore"):
            return np.exp(special.ndtri(q))

    @property
    def mean(self):
        return math.exp(0.5)

    def sample(self, rng, size=None):
        return np.exp(rng.standard_normal(size))

    def poly_asymptote(self):
        return PolyAsymptote(math.nan, math.nan, has_poly_asymptote=False)


_FAMILIES: dict[Family, type[Distribution]] = {
    cls.family: cls
    for cls in (
        Exponential, Gamma, Weibull, NakagamiM, GeneralizedGamma,
        Rice, GammaGamma, KappaMu, LogNormal,
    )
}


def make_distribution(spec: DistributionSpec | str, **params: float) -> Distribution:
    """Build a distribution from a spec, or from a family name and keyword params.

    >>> make_distribution("weibull", k=1.5).poly_asymptote().p
    0.5
    """
    if isinstance(spec, DistributionSpec):
        family, params = spec.family, {**spec.params, **params}
    else:
        family = Family.parse(spec)
    return _FAMILIES[family](**params)


# ---------------------------------------------------------------------------
# tabulated CDF for families without a closed form


class _CumulativeTable:
    """``F`` on geometric nodes, refined between nodes with Gauss-Legendre."""

    n_nodes = 4096
    span = (1e-12, 1e4)

    def __init__(self, dist: Distribution):
        self.dist = dist
        s = dist._scale
        self.x = s * np.geomspace(self.span[0], self.span[1], self.n_nodes)
        first = numerics.integrate_interval(dist.pdf, 0.0, self.x[0], tol=1e-300, rtol=1e-13).value
        seg = self._gl(self.x[:-1], self.x[1:])
        self.F = np.concatenate(([first], first + np.cumsum(seg)))
        asym = dist.poly_asymptote()
        self.head_power = asym.p + 1 if asym.has_poly_asymptote else None
        ok = np.concatenate(([True], np.diff(self.F) > 0)) & (self.F > 0)
        self._inv = PchipInterpolator(np.log(self.F[ok]), np.log(self.x[ok]))

    @classmethod
    def for_dist(cls, dist: Distribution) -> "_CumulativeTable":
        table = dist._cache.get("cdf_table")
        if table is None:
            table = dist._cache["cdf_table"] = cls(dist)
        return table

    def _gl(self, lo, hi):
        width = hi - lo
        pts = lo[:, None] + width[:, None] * _GL_X[None, :]
        return width * (self.dist.pdf(pts) @ _GL_W)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        out = np.empty_like(flat)
        j = np.searchsorted(self.x, flat, side="right") - 1
        inner = j >= 0
        jj = j[inner]
        out[inner] = self.F[jj] + self._gl(self.x[jj], flat[inner])
        for i in np.flatnonzero(~inner):
            out[i] = numerics.integrate_interval(self.dist.pdf, 0.0, flat[i], tol=1e-300, rtol=1e-13).value
        return out.reshape(x.shape)

    def ppf(self, q):
        """Invert by safeguarded Newton inside the bracketing table cell."""
        q = np.asarray(q, dtype=float)
        flat = q.ravel()
        out = np.zeros_like(flat)
        live = flat > 0
        qq = flat[live]
        j = np.searchsorted(self.F, qq, side="right") - 1
        lo = np.where(j >= 0, self.x[np.maximum(j, 0)], 0.0)
        hi = self.x[np.minimum(j + 1, self.n_nodes - 1)]
        hi = np.where(j + 1 >= self.n_nodes, self.x[-1] * 1e3, hi)
        with np.errstate(divide="ignore"):
            x = np.exp(self._inv(np.log(qq)))
        if self.head_power is not None:
            head = j < 0
            x[head] = self.x[0] * (qq[head] / self.F[0]) ** (1.0 / self.head_power)
        x = np.clip(x, lo, hi)
        for _ in range(30):
            r = self.cdf(x) - qq
            done = np.abs(r) <= 1e-14 * qq
            if np.all(done):
                break
            lo = np.where(r < 0, x, lo)
            hi = np.where(r > 0, x, hi)
            step = x - r / np.maximum(self.dist.pdf(x), 1e-300)
            bad = ~((step > lo) & (step < hi))
            x = np.where(done, x, np.where(bad, 0.5 * (lo + hi), step))
        out[live] = x
        return out.reshape(q.shape)


# ---------------------------------------------------------------------------
# conditional sampling on [0, gamma]


def _truncation_mass(d: Distribution, gamma: float) -> float:
    mass = d.cdf(gamma)
    if not mass > 1e-300:
        raise TruncationUnderflowError(
            f"F_X({gamma:g}) = {mass:g} underflows; the truncation estimator cannot be "
            "used here, use an importance-sampling estimator instead"
        )
    return mass


def conditional_scaled_quantile(d: Distribution, gamma: float, u):
    """Quantile ``u`` of ``w = X/gamma`` given ``X <= gamma``."""
    mass = _truncation_mass(d, gamma)
    u = np.asarray(u, dtype=float)
    w = np.clip(d.ppf(np.minimum(u * mass, np.nextafter(1.0, 0.0))) / gamma, 0.0, 1.0)
    w = np.where(u >= 1.0, 1.0, w)
    return float(w) if w.ndim == 0 else w


def conditional_scaled_sampler(d: Distribution, gamma: float, rng: np.random.Generator, size=None):
    """Draw ``w = X/gamma | X <= gamma`` by inverse-CDF composition."""
    return conditional_scaled_quantile(d, gamma, rng.random(size))
