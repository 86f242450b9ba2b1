"""Monte Carlo runner, estimator statistics, the naive and truncation
baselines, and a deterministic convolution oracle for ground truth.

Every estimator reduces to a function ``log_weights(rng, size)`` returning
one log-weight per replicate (``-inf`` where the event is missed). The
runner splits the ``M`` replicates into fixed shards, gives shard ``i`` the
``i``-th child of ``SeedSequence(seed)``, and merges shard moments in shard
order, so results do not depend on how many workers execute the shards.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Callable, Optional

import numpy as np

from . import numerics
from .distributions import (
    Distribution,
    DistributionSpec,
    Family,
    _truncation_mass,
    conditional_scaled_sampler,
    make_distribution,
)

__all__ = [
    "SHARD_SIZE",
    "WORKERS_ENV",
    "Moments",
    "EstimatorResult",
    "OracleResult",
    "OracleError",
    "simulate",
    "estimate_from_log_weights",
    "estimate_naive",
    "estimate_truncation",
    "chernoff_scv_lower_bound",
    "convolution_oracle",
    "Sweep",
    "ExperimentPlan",
    "PlanValidationError",
    "METHODS",
    "run",
    "recommended_samples",
]

SHARD_SIZE = 16384
WORKERS_ENV = "GAMMAIS_WORKERS"
Z95 = 1.96


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class Moments:
    """Count, mean and centred sum of squares of ``w * exp(-ref)``.

    Weights are kept relative to ``exp(ref)`` (the largest log-weight seen)
    so probabilities far below the double range of ``w**2`` still work.
    """

    n: int
    ref: float
    mean: float
    m2: float

    @classmethod
    def from_log_weights(cls, log_w: np.ndarray) -> "Moments":
        log_w = np.asarray(log_w, dtype=float).ravel()
        n = log_w.size
        hit = np.isfinite(log_w)
        if not np.any(hit):
            return cls(n, 0.0, 0.0, 0.0)
        ref = float(np.max(log_w[hit]))
        w = np.zeros(n)
        w[hit] = np.exp(log_w[hit] - ref)
        mean = math.fsum(w) / n
        m2 = math.fsum((w - mean) ** 2)
        return cls(n, ref, mean, m2)

    def merge(self, other: "Moments") -> "Moments":
        if self.n == 0:
            return other
        if other.n == 0:
            return self
        if self.mean == 0 and self.m2 == 0:
            ref = other.ref
        elif other.mean == 0 and other.m2 == 0:
            ref = self.ref
        else:
            ref = max(self.ref, other.ref)
        sa, sb = math.exp(self.ref - ref), math.exp(other.ref - ref)
        ma, mb = self.mean * sa, other.mean * sb
        n = self.n + other.n
        delta = mb - ma
        mean = ma + delta * other.n / n
        m2 = self.m2 * sa * sa + other.m2 * sb * sb + delta * delta * self.n * other.n / n
        return Moments(n, ref, mean, m2)

    @property
    def estimate(self) -> float:
        return self.mean * math.exp(self.ref)

    @property
    def sample_variance(self) -> float:
        if self.n < 2:
            return math.nan
        return self.m2 / (self.n - 1) * math.exp(2 * self.ref)

    @property
    def second_moment(self) -> float:
        return (self.m2 / self.n + self.mean**2) * math.exp(2 * self.ref)


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    variance_of_mean: float
    scv: float
    ci95_half_width: float
    samples: int
    wall_seconds: float
    wnrv: float
    seed: int
    biased: bool = False
    bias_bound: float = 0.0

    @classmethod
    def from_moments(
        cls, mom: Moments, *, seed: int, wall_seconds: float, biased=False, bias_bound=0.0
    ) -> "EstimatorResult":
        est = mom.estimate
        var = mom.sample_variance
        var_mean = var / mom.n
        # scv is undefined (nan) when every replicate missed the event
        scv = var / est**2 if est > 0 else math.nan
        return cls(
            estimate=est,
            variance_of_mean=var_mean,
            scv=scv,
            ci95_half_width=Z95 * math.sqrt(var_mean),
            samples=mom.n,
            wall_seconds=wall_seconds,
            wnrv=scv / mom.n * wall_seconds,
            seed=seed,
            biased=biased,
            bias_bound=bias_bound,
        )

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance_of_mean)

    @property
    def relative_error(self) -> float:
        return self.standard_error / self.estimate if self.estimate > 0 else math.nan

    @property
    def second_moment(self) -> float:
        """Empirical ``E[w^2]`` of a single replicate."""
        m = self.samples
        return self.variance_of_mean * m * (m - 1) / m + self.estimate**2

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for key, val in out.items():
            if isinstance(val, float) and not math.isfinite(val):
                out[key] = None
        return out


def _resolve_workers(workers: Optional[int]) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


LogWeightFn = Callable[[np.random.Generator, int], Any]


def simulate(
    log_weights: LogWeightFn, m: int, seed: int, workers: Optional[int] = None
) -> tuple[Moments, float, list]:
    """Run ``m`` replicates in shards; return merged moments, wall time, shard extras.

    ``log_weights`` may return either an array or ``(array, extra)``; the
    extras come back in shard order.
    """
    if m < 1:
        raise ValueError("need at least one sample")
    n_shards = -(-m // SHARD_SIZE)
    sizes = [SHARD_SIZE] * (n_shards - 1) + [m - SHARD_SIZE * (n_shards - 1)]
    children = np.random.SeedSequence(seed).spawn(n_shards)

    def shard(i):
        rng = np.random.Generator(np.random.PCG64(children[i]))
        out = log_weights(rng, sizes[i])
        extra = None
        if isinstance(out, tuple):
            out, extra = out
        return Moments.from_log_weights(out), extra

    workers = _resolve_workers(workers)
    start = time.perf_counter()
    if workers == 1 or n_shards == 1:
        parts = [shard(i) for i in range(n_shards)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(shard, range(n_shards)))
    wall = time.perf_counter() - start
    total = Moments(0, 0.0, 0.0, 0.0)
    for mom, _ in parts:
        total = total.merge(mom)
    return total, wall, [extra for _, extra in parts]


def estimate_from_log_weights(
    log_weights: LogWeightFn, m: int, seed: int, workers=None, **flags
) -> EstimatorResult:
    mom, wall, _ = simulate(log_weights, m, seed, workers)
    return EstimatorResult.from_moments(mom, seed=seed, wall_seconds=wall, **flags)


def _check_problem(gamma: float, n: int):
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")


# ---------------------------------------------------------------------------
# baselines


def estimate_naive(d: Distribution, gamma: float, n: int, m: int, seed: int = 0, *, workers=None):
    """Crude Monte Carlo frequency of ``sum(X) <= gamma``."""
    _check_problem(gamma, n)

    def log_weights(rng, size):
        s = d.sample(rng, (size, n)).sum(axis=1)
        return np.where(s <= gamma, 0.0, -np.inf)

    return estimate_from_log_weights(log_weights, m, seed, workers)


def estimate_truncation(d: Distribution, gamma: float, n: int, m: int, seed: int = 0, *, workers=None):
    """``F(gamma)^N`` times the frequency of ``sum(w) <= 1`` with ``w = X/gamma | X <= gamma``."""
    _check_problem(gamma, n)
    log_prefactor = n * math.log(_truncation_mass(d, gamma))

    def log_weights(rng, size):
        w = conditional_scaled_sampler(d, gamma, rng, (size, n)).sum(axis=1)
        return np.where(w <= 1.0, log_prefactor, -np.inf)

    return estimate_from_log_weights(log_weights, m, seed, workers)


def chernoff_scv_lower_bound(d: Distribution, gamma: float, n: int) -> float:
    """Lower bound ``exp(-1 - N log E_w[exp(-w)])`` on the truncation estimator's SCV."""
    mass = _truncation_mass(d, gamma)
    res = numerics.integrate_interval(
        lambda w: np.exp(-w) * gamma * d.pdf(gamma * w) / mass, 0.0, 1.0, tol=1e-14
    )
    return math.exp(-1.0 - n * math.log(res.value))


# ---------------------------------------------------------------------------
# convolution oracle


class OracleError(ArithmeticError):
    pass


@dataclass(frozen=True)
class OracleResult:
    alpha: float
    grid_points: int
    richardson_error_estimate: float

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "error_estimate": self.richardson_error_estimate,
            "grid_points": self.grid_points,
        }


def _convolve_cdf(d: Distribution, gamma: float, n: int, cells: int) -> float:
    """``P(S_n <= gamma)`` from ``F_k(x) = int F_{k-1}(x - y) dF(y)`` on ``[0, gamma]``.

    Cell masses of ``F`` are exact, so an ``x**p`` singularity of the density
    at the origin costs nothing; ``F_{k-1}`` is averaged over each cell.
    """
    x = np.linspace(0.0, gamma, cells + 1)
    F = np.asarray(d.cdf(x), dtype=float)
    F[0] = 0.0
    dF = np.diff(F)
    Fk = F
    for _ in range(n - 1):
        avg = np.empty_like(Fk)
        avg[0] = 0.0
        avg[1:] = 0.5 * (Fk[1:] + Fk[:-1])
        Fk = np.convolve(dF, avg)[: cells + 1]
    return float(Fk[cells])


def convolution_oracle(d: Distribution, gamma: float, n: int, grid_points: int = 4096) -> OracleResult:
    """Deterministic ``alpha(gamma, N)`` by repeated numerical convolution.

    The summand is restricted to ``[0, gamma]`` since mass above ``gamma``
    cannot enter the event. A half-resolution rerun gives a Richardson
    extrapolation and its error estimate.
    """
    _check_problem(gamma, n)
    if n > 16:
        raise ValueError("convolution oracle supports n <= 16")
    if grid_points < 1024 or grid_points & (grid_points - 1):
        raise ValueError("grid_points must be a power of two >= 1024")
    if n == 1:
        return OracleResult(float(d.cdf(gamma)), grid_points, 0.0)
    fine = _convolve_cdf(d, gamma, n, grid_points)
    coarse = _convolve_cdf(d, gamma, n, grid_points // 2)
    correction = (fine - coarse) / 3.0
    alpha = min(max(fine + correction, 0.0), 1.0)
    err = abs(correction)
    if alpha <= 0 or err > 0.1 * alpha:
        raise OracleError(f"oracle unresolved: alpha={alpha:.6g}, error estimate={err:.3g}")
    return OracleResult(alpha, grid_points, err)


# ---------------------------------------------------------------------------
# experiment plans

METHODS = ("naive", "truncation", "exp-twist", "gamma-is", "ln-biased", "ln-gamma-kstar")


class PlanValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Sweep:
    variable: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.variable not in ("n", "gamma"):
            raise PlanValidationError(f"sweep variable must be 'n' or 'gamma', got {self.variable!r}")
        if not self.values:
            raise PlanValidationError("sweep axis has no values")
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class ExperimentPlan:
    method: str
    dist: DistributionSpec
    n: int
    gamma: float
    samples: int = 100_000
    epsilon: float = 0.05
    seed: int = 0
    sweep: Optional[Sweep] = None

    def __post_init__(self):
        problems = []
        if self.method not in METHODS:
            problems.append(f"unknown method {self.method!r} (expected one of {', '.join(METHODS)})")
        if int(self.n) != self.n or self.n < 1:
            problems.append("n must be a positive integer")
        if not self.gamma > 0:
            problems.append("gamma must be > 0")
        if int(self.samples) != self.samples or self.samples < 2:
            problems.append("samples must be an integer >= 2")
        if not 0 < self.epsilon < 1:
            problems.append("epsilon must lie in (0, 1)")
        lognormal = self.dist.family is Family.LOGNORMAL
        if self.method in ("ln-biased", "ln-gamma-kstar") and not lognormal:
            problems.append(f"method {self.method} requires the lognormal family")
        if problems:
            raise PlanValidationError("; ".join(problems))

    def with_axis(self, variable: str, value: float) -> "ExperimentPlan":
        if variable == "n":
            return ExperimentPlan(self.method, self.dist, int(value), self.gamma, self.samples, self.epsilon, self.seed)
        return ExperimentPlan(self.method, self.dist, self.n, float(value), self.samples, self.epsilon, self.seed)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "dist": self.dist.to_dict(),
            "n": self.n,
            "gamma": self.gamma,
            "samples": self.samples,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "sweep": None,
        }
        if self.sweep is not None:
            out["sweep"] = {"variable": self.sweep.variable, "values": list(self.sweep.values)}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        sweep = data.get("sweep")
        return cls(
            method=data["method"],
            dist=DistributionSpec.from_dict(data["dist"]),
            n=int(data["n"]),
            gamma=float(data["gamma"]),
            samples=int(data.get("samples", 100_000)),
            epsilon=float(data.get("epsilon", 0.05)),
            seed=int(data.get("seed", 0)),
            sweep=Sweep(sweep["variable"], tuple(sweep["values"])) if sweep else None,
        )


def run(plan: ExperimentPlan, workers: Optional[int] = None) -> EstimatorResult:
    """Dispatch ``plan`` to its estimator; deterministic given ``(plan, seed)``."""
    from . import gamma_is, lognormal_is, twisting

    d = make_distribution(plan.dist)
    args = (plan.gamma, plan.n, plan.samples, plan.seed)
    if plan.method == "naive":
        return estimate_naive(d, *args, workers=workers)
    if plan.method == "truncation":
        return estimate_truncation(d, *args, workers=workers)
    if plan.method == "exp-twist":
        return twisting.estimate_exp_twist(d, *args, workers=workers)
    if plan.method == "gamma-is":
        if d.family is Family.LOGNORMAL:
            return lognormal_is.estimate_gamma_kstar(*args, workers=workers)
        return gamma_is.estimate_gamma_is(d, *args, workers=workers)
    if plan.method == "ln-gamma-kstar":
        return lognormal_is.estimate_gamma_kstar(*args, workers=workers)
    if plan.method == "ln-biased":
        return lognormal_is.estimate_biased_truncated(
            plan.gamma, plan.n, plan.epsilon, plan.samples, plan.seed, workers=workers
        )
    raise PlanValidationError(f"unknown method {plan.method!r}")


def recommended_samples(result: EstimatorResult, epsilon: float) -> float:
    """Samples needed for relative error ``epsilon`` at 95% confidence.

    Biased results get the statistical budget ``epsilon/2``; the other half
    is reserved for the truncation bias.
    """
    target = epsilon / 2 if result.biased else epsilon
    return Z95**2 * result.scv / target**2
