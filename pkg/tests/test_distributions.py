import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gammais.distributions import (
    DistributionSpec,
    DistributionValidationError,
    Exponential,
    Family,
    GammaGamma,
    LogNormal,
    NakagamiM,
    Rice,
    TruncationUnderflowError,
    Weibull,
    conditional_scaled_quantile,
    conditional_scaled_sampler,
    make_distribution,
)

from conftest import ASYMPTOTIC, ZOO, zoo_id


def test_construction_and_asymptote_exponents():
    assert make_distribution("weibull", k=1.5, **{"lambda": 1}).poly_asymptote().p == pytest.approx(0.5)
    assert GammaGamma(k=1.7, m=4, omega=1).poly_asymptote().p == pytest.approx(0.7)
    with pytest.raises(DistributionValidationError, match="m - k"):
        GammaGamma(k=2, m=4, omega=1)


def test_validation_lists_every_problem():
    with pytest.raises(DistributionValidationError) as info:
        make_distribution("weibull", k=-1, **{"lambda": -2})
    assert len(info.value.problems) == 2


def test_unknown_family():
    with pytest.raises(DistributionValidationError, match="unknown family"):
        Family.parse("cauchy")
    assert Family.parse("Gamma_Gamma") is Family.GAMMA_GAMMA


def test_rice_accepts_zero_nu():
    d = Rice(sigma=1, nu=0)
    assert d.poly_asymptote().b == pytest.approx(1.0)


def test_density_values():
    assert Exponential(k=1).pdf(0.0) == 1.0
    assert LogNormal().pdf(1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert Weibull(k=1.5).pdf(1.0) == pytest.approx(1.5 * math.exp(-1), rel=1e-14)
    with pytest.raises(ValueError):
        Exponential(k=1).pdf(-0.1)


def test_cdf_values():
    assert Exponential(k=1).cdf(1.0) == pytest.approx(1 - math.exp(-1), rel=1e-15)
    assert LogNormal().cdf(1.0) == 0.5
    assert Weibull(k=1.5).cdf(0.5) == pytest.approx(1 - math.exp(-(0.5**1.5)), rel=1e-14)


def test_table_cdf_against_scipy():
    x = np.array([1e-3, 0.1, 0.7, 2.0, 5.0])
    assert np.allclose(Rice(sigma=1, nu=1).cdf(x), stats.rice(1.0).cdf(x), rtol=1e-10, atol=1e-15)
    assert np.allclose(NakagamiM(m=2, omega=1).cdf(x), stats.nakagami(2.0).cdf(x), rtol=1e-12)


@pytest.mark.parametrize("d", ASYMPTOTIC, ids=zoo_id)
def test_density_approaches_its_asymptote(d):
    a = d.poly_asymptote()
    xs = np.array([1e-2, 1e-3, 1e-4, 1e-5])
    ratio = d.pdf(xs) / (a.b * xs**a.p)
    assert 0.9 <= ratio[2] <= 1.1
    assert abs(ratio[3] - 1) <= 1e-2
    dev = np.abs(ratio - 1)
    assert np.all(np.diff(dev) <= 1e-13)


def test_lognormal_has_no_asymptote():
    assert not LogNormal().poly_asymptote().has_poly_asymptote


def test_nakagami_constant():
    m, om = 2.5, 1.3
    a = NakagamiM(m=m, omega=om).poly_asymptote()
    assert a.p == pytest.approx(2 * m - 1)
    assert a.b == pytest.approx(2 * m**m / (math.gamma(m) * om**m), rel=1e-13)


def test_cdf_monotone_and_normalized(dist):
    x = np.concatenate([[0.0], dist._scale * np.geomspace(1e-6, 50, 300)])
    f = dist.cdf(x)
    assert f[0] == 0.0
    assert np.all(np.diff(f) >= -1e-15)
    assert dist.cdf(dist.ppf(1 - 1e-9)) == pytest.approx(1 - 1e-9, abs=1e-10)


def test_ppf_inverts_cdf(dist):
    q = np.array([1e-8, 0.01, 0.3, 0.5, 0.9, 0.999])
    assert np.allclose(dist.cdf(dist.ppf(q)), q, rtol=1e-9, atol=0)


def test_samples_pass_ks(dist):
    x = dist.sample(np.random.default_rng(20240611), 100_000)
    assert np.all(x >= 0)
    p = stats.kstest(x, dist.cdf).pvalue
    assert p > 1e-3


@pytest.mark.parametrize(
    "d, mean",
    [(Exponential(k=1), 1.0), (GammaGamma(k=1.7, m=4, omega=1), 1.0), (LogNormal(), math.exp(0.5))],
    ids=zoo_id,
)
def test_sample_means(d, mean):
    x = d.sample(np.random.default_rng(5), 1_000_000)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - mean) < 4 * se
    assert d.mean == pytest.approx(mean, rel=1e-10)


def test_conditional_quantile_endpoints():
    d = Exponential(k=1)
    assert conditional_scaled_quantile(d, 1.0, 1.0) == 1.0
    assert conditional_scaled_quantile(d, 1.0, 1e-12) < 1e-11
    assert conditional_scaled_quantile(d, 1.0, 0.5) == pytest.approx(
        -math.log(1 - 0.5 * (1 - math.exp(-1))), rel=1e-13
    )


def test_conditional_sampler_range(dist):
    w = conditional_scaled_sampler(dist, 0.3, np.random.default_rng(1), 2000)
    assert np.all((w >= 0) & (w <= 1))


def test_conditional_sampler_underflow():
    with pytest.raises(TruncationUnderflowError):
        conditional_scaled_sampler(LogNormal(), 1e-30, np.random.default_rng(0), 3)


def test_distribution_is_immutable():
    d = Weibull(k=1.5)
    with pytest.raises(AttributeError):
        d.k = 2.0


@settings(max_examples=30)
@given(
    k=st.floats(0.2, 5),
    m=st.floats(0.2, 8),
)
def test_spec_round_trip(k, m):
    if abs((m - k) - round(m - k)) < 1e-6 or m <= k:
        m = k + 0.5
    d = GammaGamma(k=k, m=m, omega=1)
    text = json.dumps(d.spec.to_dict())
    assert make_distribution(DistributionSpec.from_dict(json.loads(text))) == d


@settings(max_examples=30, deadline=None)
@given(gamma=st.floats(0.01, 3), u=st.floats(0, 1))
def test_conditional_quantile_in_unit_interval(gamma, u):
    w = conditional_scaled_quantile(Weibull(k=1.5), gamma, u)
    assert 0.0 <= w <= 1.0


def test_every_family_in_zoo():
    assert {d.family for d in ZOO} == set(Family)
