import math

import numpy as np
import pytest
from scipy import integrate

from gammais.distributions import Exponential, LogNormal, Weibull
from gammais.engine import convolution_oracle
from gammais.gamma_is import gamma_log_pdf
from gammais.twisting import (
    ARReport,
    TiltedSampler,
    TiltRegimeError,
    TiltSolution,
    estimate_exp_twist,
    mgf,
    mgf_derivative,
    run_exp_twist,
    sample_tilted,
    solve_tilt,
    tilted_mean,
)

from conftest import ERLANG4_AT_1, ZOO, zoo_id

SUPPORTED = [d for d in ZOO]


def exp_tilt(theta):
    return TiltSolution(theta, 1 / (1 - theta), 0.0, 1 / (1 - theta), 1 / (1 - theta))


def test_mgf_closed_forms():
    assert mgf(Exponential(k=1), -1.0) == 0.5
    assert mgf_derivative(Exponential(k=1), -1.0) == 0.25
    for d in ZOO:
        assert mgf(d, 0.0) == 1.0


def test_mgf_quadrature_matches_fine_trapezoid():
    d = Weibull(k=1.5)
    # x = u^2 removes the sqrt(x) kink at the origin so the trapezoid rule is accurate
    u = np.linspace(0, 7, 200_001)
    ref = integrate.trapezoid(d.pdf(u * u) * np.exp(-u * u) * 2 * u, u)
    assert mgf(d, -1.0) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("theta", [-0.5, -30.0, -2000.0])
def test_mgf_quadrature_matches_gamma_closed_form(theta):
    # Weibull with k=1 is Exp(1); force the quadrature path through a Weibull object
    assert mgf(Weibull(k=1.0), theta) == pytest.approx(1 / (1 - theta), rel=1e-10)


def test_solve_tilt_exponential():
    sol = solve_tilt(Exponential(k=1), 0.5, 10)
    assert sol.theta == pytest.approx(-19, rel=1e-10)
    assert abs(sol.mean_under_tilt - 0.05) <= 1e-12


def test_solve_tilt_outside_regime():
    with pytest.raises(TiltRegimeError):
        solve_tilt(Exponential(k=1), 4.0, 4)


def test_tilt_close_to_gamma_is_tilt():
    sol = solve_tilt(Weibull(k=1.5), 0.5, 12)
    theta_tilde = -(12 / 0.5) * 1.5
    assert abs(sol.theta - theta_tilde) / abs(theta_tilde) <= 0.15


def test_tilt_decreases_with_gamma():
    d = Weibull(k=1.5)
    thetas = [solve_tilt(d, g, 8).theta for g in (2.0, 1.0, 0.5, 0.2, 0.05)]
    assert all(b < a for a, b in zip(thetas, thetas[1:]))


def test_exponential_acceptance_approaches_one():
    rates = []
    for theta in (-3.0, -19.0, -999.0):
        _, rep = sample_tilted(Exponential(k=1), exp_tilt(theta), np.random.default_rng(3), 20_000)
        assert rep.accepts <= rep.proposals
        rates.append(rep.acceptance_rate)
    assert rates == sorted(rates)
    assert rates[-1] > 0.9


def test_tilted_draws_for_exponential_are_exponential():
    x, _ = sample_tilted(Exponential(k=1), exp_tilt(-19.0), np.random.default_rng(8), 50_000)
    se = (1 / 20) / math.sqrt(x.size)
    assert abs(x.mean() - 1 / 20) < 4 * se


@pytest.mark.parametrize("d", SUPPORTED, ids=zoo_id)
def test_tilted_mean_identity(d):
    tilt = solve_tilt(d, 0.5, 8)
    x, rep = sample_tilted(d, tilt, np.random.default_rng(11), 100_000)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 0.5 / 8) < 4 * se
    assert 0 < rep.acceptance_rate <= 1


def test_weibull_tilted_sample_mean():
    d = Weibull(k=1.5)
    tilt = solve_tilt(d, 0.5, 12)
    x, _ = sample_tilted(d, tilt, np.random.default_rng(2), 100_000)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 0.5 / 12) < 4 * se


@pytest.mark.parametrize("d", [Weibull(k=1.5), Weibull(k=0.5), LogNormal()], ids=zoo_id)
def test_envelope_dominates_and_reconstructs_density(d):
    tilt = solve_tilt(d, 0.5, 6)
    s = TiltedSampler(d, tilt)
    x = np.random.default_rng(4).gamma(s.shape, s.scale, 200_000)
    assert np.max(s.log_ratio(x)) <= s.log_envelope
    # M(theta) * tilted density == f(x) exp(theta x)
    grid = s.scale * np.geomspace(1e-3, 30, 50)
    tilted = np.exp(s.log_ratio(grid) + gamma_log_pdf(grid, s.shape, s.scale))
    assert np.allclose(tilt.normalizer * tilted, d.pdf(grid) * np.exp(tilt.theta * grid), rtol=1e-8)


def test_ar_report_merge():
    a = ARReport(10, 7, 1.2) + ARReport(5, 5, 1.3)
    assert (a.proposals, a.accepts, a.envelope_constant) == (15, 12, 1.3)
    assert ARReport().acceptance_rate != ARReport().acceptance_rate  # nan


@pytest.mark.parametrize("n, gamma, expected", [(4, 1.0, ERLANG4_AT_1), (1, 0.5, 1 - math.exp(-0.5))])
def test_exp_twist_exponential(n, gamma, expected):
    r = estimate_exp_twist(Exponential(k=1), gamma, n, 100_000, seed=1)
    assert abs(r.estimate - expected) < 3 * r.standard_error + 1e-15


def test_exp_twist_weibull_against_oracle():
    d = Weibull(k=1.5)
    ref = convolution_oracle(d, 0.5, 5).alpha
    r, tilt, rep = run_exp_twist(d, 0.5, 5, 100_000, seed=2)
    assert abs(r.estimate - ref) < 3 * r.standard_error
    assert rep.proposals >= 5 * 100_000
    assert tilted_mean(d, tilt.theta) == pytest.approx(0.1, rel=1e-10)


def test_exp_twist_single_summand_lognormal_median():
    # N = 1, gamma = 1 is the median, so alpha = 1/2; E[X] > 1 keeps the tilt negative
    r = estimate_exp_twist(LogNormal(), 1.0, 1, 100_000, seed=3)
    assert abs(r.estimate - 0.5) < 3 * r.standard_error
