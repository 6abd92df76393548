import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from deepwh.errors import DomainError, NoConvergence
from deepwh.quadrature import QuadConfig, integrate_01, integrate_0inf
from deepwh.special_fn import gamma_ratio


def test_constant():
    assert integrate_01(lambda u: np.ones_like(u)) == pytest.approx(1.0, rel=1e-14)


def test_inverse_sqrt_singularity():
    assert integrate_01(lambda u: u ** -0.5, 0.5, 0.0) == pytest.approx(2.0, rel=1e-12)


def test_beta_integral_with_both_singularities():
    al, rho = 0.8, 0.5
    a = al * rho
    val = integrate_01(lambda u, w: w ** (-a) * u ** (al - 1), 1 - al, a, complement=True)
    expected = gamma_ratio((al, 1 - a), (al + 1 - a,)).real
    assert val == pytest.approx(expected, rel=1e-12)


def test_full_output_reports_error():
    val, err, levels = integrate_01(lambda u: np.sqrt(u), full_output=True)
    assert val == pytest.approx(2 / 3, rel=1e-13)
    assert err < 1e-10 and levels >= 1


def test_exponential_integrals():
    assert integrate_0inf(lambda x: np.exp(-x)) == pytest.approx(1.0, rel=1e-13)
    assert integrate_0inf(lambda x: x * np.exp(-x)) == pytest.approx(1.0, rel=1e-12)


def test_change_of_variables_cross_check():
    al, rho = 0.8, 0.5
    a, ah = al * rho, al * (1 - rho)
    f = lambda x: np.exp(-al * x) * (-np.expm1(-x)) ** (-a) * (1 + np.exp(-x)) ** (-ah)
    direct = integrate_0inf(f, a, al)
    # u = e^{-x}: integrand u^{alpha-1} (1-u)^{-a} (1+u)^{-ah}
    via01 = integrate_01(lambda u, w: u ** (al - 1) * w ** (-a) * (1 + u) ** (-ah), 1 - al, a, complement=True)
    assert direct == pytest.approx(via01, rel=1e-9)


def test_complex_integrand_parts():
    s = 0.7 + 1.3j
    f = lambda x: np.exp(-s * x) * np.exp(-x)
    whole = integrate_0inf(f)
    re = integrate_0inf(lambda x: np.real(f(x)))
    im = integrate_0inf(lambda x: np.imag(f(x)))
    assert whole == pytest.approx(1 / (1 + s), rel=1e-12)
    assert whole.real == pytest.approx(re, rel=1e-12)
    assert whole.imag == pytest.approx(im, rel=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 0.9))
def test_linearity(a, b, e):
    f = lambda u: u ** (-e)
    g = lambda u: np.log1p(u)
    lhs = integrate_01(lambda u: a * f(u) + b * g(u), e, 0.0)
    rhs = a * integrate_01(f, e, 0.0) + b * integrate_01(g)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


@given(st.floats(0.0, 0.95), st.floats(0.2, 3.0))
def test_0inf_matches_mpmath_gamma(e, rate):
    # int x^{-e} e^{-rate x} dx = Gamma(1-e) rate^{e-1}
    val = integrate_0inf(lambda x: x ** (-e) * np.exp(-rate * x), e, rate)
    assert val == pytest.approx(math.gamma(1 - e) * rate ** (e - 1), rel=1e-9)


def test_non_integrable_exponent_rejected():
    with pytest.raises(DomainError):
        integrate_01(lambda u: 1 / u, 1.0, 0.0)
    with pytest.raises(DomainError):
        integrate_0inf(lambda x: np.exp(-x), 0.0, 0.0)


def test_unreachable_tolerance_raises():
    cfg = QuadConfig(rel_tol=1e-20, abs_tol=1e-20, max_levels=6)
    with pytest.raises(NoConvergence):
        integrate_01(lambda u: u ** -0.7, 0.7, 0.0, cfg)


def test_config_validation():
    with pytest.raises(DomainError):
        QuadConfig(rel_tol=0)
    with pytest.raises(DomainError):
        QuadConfig(max_levels=2)


@pytest.mark.parametrize("e", [0.8, 0.95, 0.99, 0.999])
def test_near_critical_endpoint_exponent(e):
    # A share u^{1-e} of the mass lies below u; for e near 1 that share is
    # visible even below the smallest double.
    val = integrate_01(lambda u, w: u ** (-e) * w ** (-0.9), e, 0.9, complement=True)
    assert val == pytest.approx(gamma_ratio((1 - e, 0.1), (1.1 - e,)).real, rel=1e-10)
