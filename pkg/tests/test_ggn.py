import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from stbcaber.errors import DomainError, FitError, FitNotFoundError
from stbcaber.ggn import (FIT_HEADER, TABLE_IV, ExpApprox, GgnModel, Scaling, builtin_fit,
                          default_grid, lambda0, log_q_exact, max_abs_error, q_approx_sq, q_exact,
                          read_fit_file, refit, write_fit_file)

SHAPES = [0.5, 1.0, 1.5, 2.0, 2.5, 4.0]


def q_integral(a, x):
    """Tail function from its defining integral, with mpmath."""
    lam = mpmath.sqrt(mpmath.gamma(3.0 / a) / mpmath.gamma(1.0 / a))
    c = a * lam ** (2.0 / a) / (2 * mpmath.gamma(1.0 / a))
    return float(c * mpmath.quad(lambda u: mpmath.exp(-(lam * u) ** a), [x, x + 1, mpmath.inf]))


@pytest.mark.parametrize("a", SHAPES)
@pytest.mark.parametrize("x", [0.0, 0.3, 1.0, 2.5, 6.0])
def test_q_exact_matches_defining_integral(a, x):
    assert q_exact(GgnModel(a), x) == pytest.approx(q_integral(a, x), rel=1e-12)


@pytest.mark.parametrize("a", SHAPES)
def test_normalized_value_at_origin_is_half(a):
    assert q_exact(GgnModel(a, Scaling.NORMALIZED), 0.0) == 0.5


def test_gaussian_case_is_classical_q():
    x = np.linspace(0.0, 8.0, 161)
    ref = 0.5 * special.erfc(x / math.sqrt(2.0))
    for scaling in Scaling:
        np.testing.assert_allclose(q_exact(GgnModel(2.0, scaling), x), ref, rtol=1e-12)


def test_laplacian_case_is_exponential():
    x = np.linspace(0.0, 20.0, 101)
    np.testing.assert_allclose(q_exact(GgnModel(1.0, Scaling.NORMALIZED), x),
                               0.5 * np.exp(-math.sqrt(2.0) * x), rtol=1e-12)


@given(st.sampled_from(SHAPES), st.floats(0.0, 200.0))
@settings(max_examples=80, deadline=None)
def test_scalings_differ_by_constant_factor(a, x):
    # compared in logs so the relation also holds where the values underflow
    lp = log_q_exact(GgnModel(a, Scaling.PAPER), x)
    ln = log_q_exact(GgnModel(a, Scaling.NORMALIZED), x)
    tol = 1e-13 * max(1.0, abs(ln))
    assert lp - ln == pytest.approx((2.0 / a - 1.0) * math.log(lambda0(a)), abs=tol)


@given(st.floats(0.2, 6.0), st.floats(0.0, 10.0), st.floats(1e-3, 2.0))
@settings(max_examples=80, deadline=None)
def test_q_exact_strictly_decreasing(a, x, dx):
    m = GgnModel(a)
    assert log_q_exact(m, x + dx) < log_q_exact(m, x)


def test_log_q_exact_beyond_underflow():
    m = GgnModel(2.0)
    assert q_exact(m, 40.0) == 0.0
    ref = float(mpmath.log(mpmath.erfc(40 / mpmath.sqrt(2)) / 2))
    assert log_q_exact(m, 40.0) == pytest.approx(ref, rel=1e-13)


def test_lambda0_gaussian_and_laplacian():
    assert lambda0(2.0) == pytest.approx(math.sqrt(0.5), rel=1e-15)
    assert lambda0(1.0) == pytest.approx(math.sqrt(2.0), rel=1e-15)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_bad_shape_rejected(bad):
    with pytest.raises(DomainError):
        GgnModel(bad)


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        q_exact(GgnModel(2.0), -0.1)


# ---------------------------------------------------------------- tabulated fits


@pytest.mark.parametrize("a", sorted(TABLE_IV))
def test_table_row_sums_match_value_at_origin(a):
    # the tabulated rows fit the paper scaling: sum p_i = Q_a(0)
    p, _ = TABLE_IV[a]
    assert sum(p) == pytest.approx(GgnModel(a).prefactor, rel=0.02)


def test_table_values_transcribed():
    assert TABLE_IV[0.5][0] == (44.920, 126.460, 389.400, 96.540)
    assert TABLE_IV[2.5][0][2] == -1.125
    assert TABLE_IV[2.0][1] == (1.981, 0.534, 0.852, 10.268)
    assert sum(TABLE_IV[0.5][0]) == pytest.approx(657.32)


def test_gaussian_row_at_unit_argument():
    assert q_approx_sq(builtin_fit(2.0), 1.0) == pytest.approx(0.1586, abs=1e-3)


def test_builtin_unknown_shape():
    with pytest.raises(FitNotFoundError, match="refit"):
        builtin_fit(1.7)


def test_approximation_is_returned_unclamped():
    fit = ExpApprox(2.0, (0.6, -1.125, 0.3, 0.2), (0.5, 1.0, 2.0, 3.0))
    x = np.array([0.0, 0.5, 4.0])
    ref = [sum(p * math.exp(-q * v) for p, q in zip(fit.p, fit.q)) for v in x]
    v = q_approx_sq(fit, x)
    np.testing.assert_allclose(v, ref, rtol=1e-13)
    assert v[0] < 0


@pytest.mark.xfail(strict=True, reason="tabulated rows miss the stated 5e-3 relative fidelity; "
                   "the square-root cusp at the origin is not captured by four exponentials")
@pytest.mark.parametrize("a", sorted(TABLE_IV))
def test_table_rows_meet_relative_fidelity(a):
    fit = builtin_fit(a)
    assert fit.max_abs_err <= 5e-3 * sum(fit.p)


def test_default_grid_shape():
    g = default_grid()
    assert g[0] == 0.0 and g[-1] == 30.0 and g.size == 201
    assert np.all(np.diff(g) > 0)


# ---------------------------------------------------------------- refit


@pytest.mark.parametrize("a", sorted(TABLE_IV))
def test_refit_beats_table(a):
    fit = refit(a)
    assert fit.max_abs_err <= builtin_fit(a).max_abs_err
    assert fit.max_abs_err == pytest.approx(max_abs_error(fit), rel=1e-12)
    assert all(q > 0 for q in fit.q)


def test_refit_untabulated_shape_and_normalized_scaling():
    fit = refit(1.7, scaling=Scaling.NORMALIZED)
    assert fit.scaling is Scaling.NORMALIZED
    assert fit.max_abs_err < 5e-3
    assert q_approx_sq(fit, 0.0) == pytest.approx(0.5, abs=5e-3)


def test_refit_is_deterministic():
    assert refit(1.5, seed=3) == refit(1.5, seed=3)


def test_refit_rejects_short_grid():
    with pytest.raises(DomainError):
        refit(2.0, grid=np.linspace(0, 10, 100))


def test_fit_error_carries_best_candidate():
    err = FitError("x", best=builtin_fit(2.0))
    assert err.best.a == 2.0


# ---------------------------------------------------------------- fit files


def test_fit_file_round_trip(tmp_path):
    fits = [builtin_fit(a) for a in sorted(TABLE_IV)]
    path = tmp_path / "fits.csv"
    text = write_fit_file(fits, path)
    assert text.splitlines()[0] == ",".join(FIT_HEADER)
    back = read_fit_file(path)
    for f in fits:
        g = back[f.a]
        assert g.p == f.p and g.q == f.q
        assert g.max_abs_err == pytest.approx(f.max_abs_err, rel=1e-11)
    assert read_fit_file(text)[2.0].p == builtin_fit(2.0).p


def test_fit_file_bad_header():
    with pytest.raises(DomainError):
        read_fit_file("a,b\n1,2\n")


def test_exp_approx_validation():
    with pytest.raises(DomainError):
        ExpApprox(2.0, (1, 2, 3), (1, 2, 3))
    with pytest.raises(DomainError):
        ExpApprox(2.0, (1, 2, 3, 4), (1, 2, 3, -4))
