import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stbcaber.errors import DomainError
from stbcaber.modulation import Scheme, modulation_params, parse_modulation


@pytest.mark.parametrize("name,a,b", [("bfsk", 1.0, 1.0), ("bpsk", 1.0, 2.0), ("qpsk", 2.0, 1.0)])
def test_binary_rows(name, a, b):
    m = modulation_params(name)
    assert (m.a_coef, m.b_coef) == (a, b)


def test_m_ary_rows():
    assert modulation_params("mpam", 4).a_coef == 1.5
    assert modulation_params("mpam", 4).b_coef == pytest.approx(0.4)
    m = modulation_params("mqam-rect", 16)
    assert (m.a_coef, m.b_coef) == (3.0, pytest.approx(0.2))
    m = modulation_params("mqam-nonrect", 32)
    assert (m.a_coef, m.b_coef) == (4.0, pytest.approx(3.0 / 31.0))
    m = modulation_params("mpsk", 8)
    assert m.b_coef == pytest.approx(2 * math.sin(math.pi / 8) ** 2)


def test_four_psk_equals_qpsk_row():
    m = modulation_params("mpsk", 4)
    q = modulation_params("qpsk")
    assert m.a_coef == q.a_coef and m.b_coef == pytest.approx(q.b_coef, rel=1e-15)


def test_binary_pam_equals_bpsk():
    m = modulation_params("mpam", 2)
    assert (m.a_coef, m.b_coef) == pytest.approx((1.0, 2.0))


@pytest.mark.parametrize("scheme", ["mpam", "mpsk", "mqam-nonrect"])
@given(M=st.integers(2, 255))
def test_b_strictly_decreasing_in_order(scheme, M):
    assert modulation_params(scheme, M + 1).b_coef < modulation_params(scheme, M).b_coef


def test_rect_qam_decreasing_over_squares():
    bs = [modulation_params("mqam-rect", k * k).b_coef for k in range(2, 17)]
    assert all(b2 < b1 for b1, b2 in zip(bs, bs[1:]))


@pytest.mark.parametrize("args", [("bpsk", 4), ("mpsk", None), ("mpsk", 1), ("mpam", 2.5),
                                  ("mqam-rect", 8), ("mqam-rect", 2)])
def test_invalid_orders(args):
    with pytest.raises(DomainError):
        modulation_params(*args)


def test_unknown_scheme():
    with pytest.raises(ValueError):
        modulation_params("ook")


def test_parse_modulation_and_labels():
    assert parse_modulation("MQAM-RECT:64") == modulation_params("mqam-rect", 64)
    assert parse_modulation("mpsk", 8).label == "mpsk8"
    assert parse_modulation("bpsk").label == "bpsk"
    assert Scheme("mpsk").m_ary and not Scheme("qpsk").m_ary
