import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gammais.distributions import Exponential, Gamma, LogNormal, NakagamiM, PolyAsymptote, Weibull
from gammais.engine import convolution_oracle, estimate_naive
from gammais.gamma_is import (
    GammaISParams,
    Provenance,
    estimate_gamma_is,
    gamma_is_params,
    gamma_log_pdf,
    log_weight,
    log_weight_factored,
    second_moment_ratio,
)
from gammais.lognormal_is import kstar_params

from conftest import ASYMPTOTIC, ERLANG4_AT_1, zoo_id


@pytest.mark.parametrize(
    "p, gamma, n, shape, tilt, scale",
    [(0.0, 0.5, 10, 1.0, -20.0, 0.05), (0.5, 0.5, 12, 1.5, -36.0, 1 / 36)],
)
def test_params(p, gamma, n, shape, tilt, scale):
    par = gamma_is_params(PolyAsymptote(p, 1.0), gamma, n)
    assert par.shape == shape
    assert par.tilt == pytest.approx(tilt, rel=1e-15)
    assert par.scale == pytest.approx(scale, rel=1e-15)
    assert par.provenance is Provenance.ASYMPTOTE_DERIVED


def test_params_nakagami():
    par = gamma_is_params(NakagamiM(m=1, omega=1).poly_asymptote(), 1.0, 4)
    assert (par.shape, par.scale) == (2.0, 0.125)


def test_params_reject_missing_asymptote():
    with pytest.raises(ValueError, match="asymptote"):
        gamma_is_params(LogNormal().poly_asymptote(), 1.0, 2)


@settings(max_examples=50)
@given(p=st.floats(-0.95, 10), gamma=st.floats(1e-4, 10), n=st.integers(1, 64))
def test_mean_matching(p, gamma, n):
    for par in (gamma_is_params(PolyAsymptote(p, 1.0), gamma, n), kstar_params(gamma, n)):
        assert par.shape * par.scale == pytest.approx(gamma / n, rel=4e-16)
        assert par.tilt * par.scale == pytest.approx(-1.0, rel=4e-16)


def test_log_weight_exponential_closed_form():
    gamma, n = 0.7, 3
    x = np.array([0.1, 0.02, 0.3])
    par = gamma_is_params(PolyAsymptote(0.0, 1.0), gamma, n)
    expected = np.sum(-x) - np.sum(math.log(n / gamma) - (n / gamma) * x)
    assert log_weight(Exponential(k=1), par, x) == pytest.approx(expected, rel=1e-14)


def test_two_weight_paths_agree():
    d = Weibull(k=1.5)
    par = gamma_is_params(d.poly_asymptote(), 0.5, 2)
    x = np.array([0.01, 0.01])
    assert abs(log_weight(d, par, x) - log_weight_factored(d, par, x)) <= 1e-10


@pytest.mark.parametrize("d", ASYMPTOTIC, ids=zoo_id)
def test_two_weight_paths_agree_everywhere(d):
    par = gamma_is_params(d.poly_asymptote(), 0.5, 4)
    x = np.random.default_rng(1).gamma(par.shape, par.scale, (200, 4))
    a, b = log_weight(d, par, x), log_weight_factored(d, par, x)
    assert np.all(np.isfinite(a))
    assert np.allclose(a, b, rtol=1e-10, atol=1e-10)


def test_gamma_summand_weight():
    # Gamma(2,1) target, Gamma(2, s) proposal: ratio s^2 exp(-x (1 - 1/s)) per summand
    d = Gamma(k=2, beta=1)
    par = gamma_is_params(d.poly_asymptote(), 1.0, 3)
    s = par.scale
    x = np.array([0.05, 0.2, 0.4])
    expected = np.sum(2 * math.log(s) - x * (1 - 1 / s))
    assert log_weight(d, par, x) == pytest.approx(expected, rel=1e-13)


def test_weights_reject_nonpositive():
    par = gamma_is_params(PolyAsymptote(0.0, 1.0), 1.0, 2)
    with pytest.raises(ValueError):
        log_weight(Exponential(k=1), par, np.array([0.0, 0.1]))


def test_exponential_special_case_is_exponential_proposal():
    par = gamma_is_params(PolyAsymptote(0.0, 1.0), 0.5, 10)
    x = np.linspace(1e-4, 1, 101)
    rate = 10 / 0.5
    assert np.allclose(gamma_log_pdf(x, par.shape, par.scale), math.log(rate) - rate * x, rtol=0, atol=1e-12)


@pytest.mark.parametrize("n, gamma, expected", [(4, 1.0, ERLANG4_AT_1), (1, 1.0, 1 - math.exp(-1))])
def test_estimate_exponential(n, gamma, expected):
    r = estimate_gamma_is(Exponential(k=1), gamma, n, 100_000, seed=5)
    assert abs(r.estimate - expected) < 3 * r.standard_error
    assert not r.biased


def test_estimate_weibull_rare():
    d = Weibull(k=1.5)
    ref = convolution_oracle(d, 0.5, 12)
    r = estimate_gamma_is(d, 0.5, 12, 100_000, seed=6)
    assert r.relative_error <= 0.05
    assert abs(r.estimate - ref.alpha) < 3 * r.standard_error + ref.richardson_error_estimate


CASES = [
    (Exponential(k=1), 2.0, 2), (Exponential(k=2), 1.0, 3), (Weibull(k=1.5), 1.0, 2),
    (Weibull(k=0.5), 0.5, 3), (Gamma(k=2, beta=1), 3.0, 3), (NakagamiM(m=2, omega=1), 1.5, 2),
    (NakagamiM(m=0.7, omega=1), 1.0, 3), (Weibull(k=3), 1.5, 3), (Gamma(k=0.5, beta=2), 0.5, 2),
    (Exponential(k=1), 3.0, 5),
]


@pytest.mark.parametrize("d, gamma, n", CASES)
def test_agrees_with_naive_on_common_events(d, gamma, n):
    naive = estimate_naive(d, gamma, n, 100_000, seed=1)
    assert naive.estimate >= 0.01
    r = estimate_gamma_is(d, gamma, n, 100_000, seed=2)
    se = math.hypot(naive.standard_error, r.standard_error)
    assert abs(r.estimate - naive.estimate) < 3 * se


def test_scv_nearly_flat_in_n():
    d = Weibull(k=1.5)
    lo = estimate_gamma_is(d, 0.5, 2, 100_000, seed=1).scv
    hi = estimate_gamma_is(d, 0.5, 12, 100_000, seed=1).scv
    assert hi <= 10 * lo


def test_second_moment_ratio_exponential_near_one():
    ratio = second_moment_ratio(Exponential(k=1), 0.5, 10, 100_000, seed=3)
    assert 0.5 <= ratio <= 2


def test_same_samples_give_unit_ratio():
    a = estimate_gamma_is(Weibull(k=1.5), 0.5, 6, 50_000, seed=9)
    b = estimate_gamma_is(Weibull(k=1.5), 0.5, 6, 50_000, seed=9)
    assert a.second_moment / b.second_moment == 1.0


def test_params_dataclass_is_frozen():
    par = GammaISParams.matched(2.0, 1.0, 4, Provenance.KSTAR_OPTIMIZED)
    with pytest.raises(AttributeError):
        par.shape = 3.0
    assert par.log_normalizer == pytest.approx(
        math.log(stats.gamma(2.0, scale=par.scale).pdf(0.1) / 0.1 / math.exp(-0.1 / par.scale)) * -1, rel=1e-12
    )
