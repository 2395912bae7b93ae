import math

import numpy as np
import pytest
from scipy import integrate, stats

from inference.distributions import chi2_sf, normal_cdf, normal_ppf, normal_sf, regularized_gamma_q
from inference.inference import Z_975


@pytest.mark.parametrize("r", [1, 2, 3, 5, 10, 30])
def test_chi2_sf_matches_scipy(r):
    for x in np.linspace(0.0, 50.0, 101):
        assert chi2_sf(float(x), r) == pytest.approx(stats.chi2.sf(x, r), abs=1e-10)


def test_chi2_critical_value():
    assert chi2_sf(3.841458820694124, 1) == pytest.approx(0.05, abs=1e-12)
    assert chi2_sf(0.0, 4) == 1.0


@pytest.mark.parametrize("a", [0.5, 1.0, 2.5, 10.0])
@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 20.0])
def test_upper_gamma_against_quadrature(a, x):
    integral, _ = integrate.quad(lambda t: t ** (a - 1.0) * math.exp(-t), x, np.inf, epsabs=1e-13, epsrel=1e-13)
    assert regularized_gamma_q(a, x) == pytest.approx(integral / math.gamma(a), abs=1e-10)


def test_exponential_case():
    for x in (0.01, 0.7, 3.0, 12.0):
        assert regularized_gamma_q(1.0, x) == pytest.approx(math.exp(-x), rel=1e-12)


@pytest.mark.parametrize("q", [1e-10, 0.01, 0.3, 0.5, 0.9, 0.975, 0.999])
def test_normal_ppf(q):
    assert normal_ppf(q) == pytest.approx(stats.norm.ppf(q), rel=1e-9, abs=1e-12)
    assert normal_cdf(normal_ppf(q)) == pytest.approx(q, rel=1e-9)


def test_normal_quantile_constant():
    assert normal_ppf(0.975) == pytest.approx(Z_975, abs=1e-12)


def test_normal_tails():
    assert normal_sf(10.0) == pytest.approx(stats.norm.sf(10.0), rel=1e-10)
    assert normal_cdf(-10.0) == pytest.approx(stats.norm.cdf(-10.0), rel=1e-10)


@pytest.mark.parametrize("call", [
    lambda: regularized_gamma_q(0.0, 1.0),
    lambda: regularized_gamma_q(1.0, -1.0),
    lambda: chi2_sf(1.0, 0),
    lambda: normal_ppf(0.0),
    lambda: normal_ppf(1.0),
])
def test_invalid_arguments(call):
    with pytest.raises(ValueError):
        call()
