import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from stbcaber.errors import IntegrationError
from stbcaber.lm import levenberg_marquardt
from stbcaber.quadrature import gauss_kronrod, quad_semi_infinite


def test_rule_weights_integrate_polynomials_exactly():
    # G7-K15 is exact to degree 29 (Kronrod) on a single interval
    val, err = gauss_kronrod(lambda x: x ** 28 + 3 * x ** 5, -1.0, 1.0, initial=1)
    assert val == pytest.approx(2.0 / 29.0, rel=1e-14)


@pytest.mark.parametrize("f,a,b", [
    (np.sin, 0.0, math.pi),
    (lambda x: np.exp(-x * x), -3.0, 5.0),
    (lambda x: 1.0 / np.sqrt(x), 0.0, 1.0),
    (lambda x: np.log(x), 0.0, 2.0),
    (lambda x: np.cos(50 * x), 0.0, 1.0),
])
def test_gauss_kronrod_matches_scipy(f, a, b):
    ref, _ = integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=500)
    val, err = gauss_kronrod(f, a, b)
    assert val == pytest.approx(ref, rel=1e-9, abs=1e-12)
    assert err < 1e-8


def test_gauss_kronrod_vector_valued():
    def f(x):
        return np.stack([x, x ** 2, np.exp(x)], axis=1)

    val, err = gauss_kronrod(f, 0.0, 1.0)
    np.testing.assert_allclose(val, [0.5, 1.0 / 3.0, math.e - 1.0], rtol=1e-14)
    assert val.shape == (3,)


def test_gauss_kronrod_reports_budget_exhaustion():
    with pytest.raises(IntegrationError) as info:
        gauss_kronrod(lambda x: np.sin(1.0 / x) / x, 1e-9, 1.0, limit=20, epsrel=1e-14)
    assert math.isfinite(info.value.value)
    assert info.value.abserr > 0


@pytest.mark.parametrize("k,theta", [(0.3, 1.0), (1.0, 1e-3), (5.5, 200.0), (40.0, 2.0)])
def test_semi_infinite_gamma_density_moments(k, theta):
    def logpdf(x):
        return (k - 1) * np.log(x) - x / theta - math.lgamma(k) - k * math.log(theta)

    v, _ = quad_semi_infinite(logpdf, lambda x: np.stack([np.ones_like(x), x, x * x], axis=1),
                              center=k * theta)
    np.testing.assert_allclose(v, [1.0, k * theta, k * (k + 1) * theta ** 2], rtol=1e-11)


def test_semi_infinite_tiny_integral_keeps_relative_accuracy():
    # Laplace transform of a unit exponential far into its tail
    c = 1e6
    v, _ = quad_semi_infinite(lambda x: -x - c * x, center=1e-6)
    assert v == pytest.approx(1.0 / (1.0 + c), rel=1e-12)
    v2, _ = quad_semi_infinite(lambda x: -x, lambda x: np.exp(-700.0 - x), center=1.0)
    assert v2 == pytest.approx(0.5 * math.exp(-700.0), rel=1e-12)


@given(st.floats(0.2, 20.0), st.floats(1e-3, 1e3), st.floats(0.01, 50.0))
@settings(max_examples=40, deadline=None)
def test_semi_infinite_laplace_transform_of_gamma(k, theta, s):
    def logpdf(x):
        return (k - 1) * np.log(x) - x / theta - math.lgamma(k) - k * math.log(theta)

    v, _ = quad_semi_infinite(logpdf, lambda x: np.exp(-s * x), center=k * theta)
    assert v == pytest.approx((1.0 + s * theta) ** (-k), rel=1e-9)


def test_semi_infinite_scalar_and_sign_changing_factor():
    v, _ = quad_semi_infinite(lambda x: -x, lambda x: np.cos(x))
    assert np.ndim(v) == 0
    assert v == pytest.approx(0.5, rel=1e-11)


def test_semi_infinite_against_scipy_with_incomplete_gamma():
    # E[Q(s, x)] under an exponential weight
    f = lambda x: special.gammaincc(0.5, x) * np.exp(-x)
    ref, _ = integrate.quad(f, 0, np.inf, epsabs=1e-14, epsrel=1e-13)
    v, _ = quad_semi_infinite(lambda x: -x, lambda x: special.gammaincc(0.5, x))
    assert v == pytest.approx(ref, rel=1e-10)


# ---------------------------------------------------------------- LM


def test_levenberg_marquardt_rosenbrock():
    def fun(x):
        r = np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]])
        jac = np.array([[-20 * x[0], 10.0], [-1.0, 0.0]])
        return r, jac

    res = levenberg_marquardt(fun, np.array([-1.2, 1.0]))
    assert res.converged
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-8)
    assert res.cost <= res.initial_cost


def test_levenberg_marquardt_exponential_fit_matches_scipy(rng):
    from scipy.optimize import least_squares
    t = np.linspace(0, 4, 60)
    y = 2.5 * np.exp(-1.3 * t) + 0.01 * rng.standard_normal(t.size)

    def fun(p):
        e = np.exp(-p[1] * t)
        return p[0] * e - y, np.stack([e, -p[0] * t * e], axis=1)

    res = levenberg_marquardt(fun, np.array([1.0, 0.5]))
    ref = least_squares(lambda p: fun(p)[0], [1.0, 0.5], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    np.testing.assert_allclose(res.x, ref.x, rtol=1e-7)


def test_levenberg_marquardt_never_increases_cost():
    seen = []

    def fun(x):
        r = np.array([x[0] ** 2 - 2.0, x[0] * x[1] - 1.0, x[1] - 0.3])
        jac = np.array([[2 * x[0], 0.0], [x[1], x[0]], [0.0, 1.0]])
        seen.append(0.5 * float(r @ r))
        return r, jac

    res = levenberg_marquardt(fun, np.array([3.0, -2.0]))
    assert res.cost <= res.initial_cost
    assert res.cost <= min(seen) + 1e-15
