import math

import pytest

from gammais.distributions import (
    Exponential,
    Gamma,
    GammaGamma,
    GeneralizedGamma,
    KappaMu,
    LogNormal,
    NakagamiM,
    Rice,
    Weibull,
)

# every family once, at parameters used in the benchmarks where there are any
ZOO = [
    Exponential(k=1),
    Gamma(k=2, beta=1),
    Weibull(k=1.5, **{"lambda": 1}),
    Weibull(k=0.5),
    NakagamiM(m=2, omega=1),
    GeneralizedGamma(a=1, d=1.5, p=2),
    Rice(sigma=1, nu=1),
    GammaGamma(k=1.7, m=4, omega=1),
    KappaMu(kappa=1, mu=1.5, omega=1),
    LogNormal(),
]
ASYMPTOTIC = [d for d in ZOO if d.poly_asymptote().has_poly_asymptote]

ERLANG4_AT_1 = 1 - math.exp(-1) * (1 + 1 + 1 / 2 + 1 / 6)


def zoo_id(d):
    return repr(d)


@pytest.fixture(params=ZOO, ids=zoo_id)
def dist(request):
    return request.param
