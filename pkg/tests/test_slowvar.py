import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbpi.errors import ArgumentError, DomainError, NumericalError
from mbpi.slowvar import (
    RemainderForm,
    SlowlyVaryingSpec as S,
    eval_L,
    lemma2_asymptotic,
    lemma2_quadrature,
    lemma3_asymptotic,
    lemma3_quadrature,
    power_integral,
)

FAMILIES = [S.constant(1.0), S.constant(2.5), S.log_power(1.0, 1.0), S.log_power(0.5, -0.5),
            S.with_remainder(1.0, 0.5, 1.0), S.with_remainder(2.0, 0.3, -0.5)]


def test_eval_examples():
    assert eval_L(S.constant(1), 1e6) == 1.0
    assert eval_L(S.with_remainder(2, 0.5, 1), 4.0) == pytest.approx(3.0, abs=1e-15)
    assert eval_L(S.log_power(1, 1), math.e**3) == pytest.approx(3.0, abs=1e-14)


def test_eval_rejects_x_below_one():
    with pytest.raises(DomainError):
        eval_L(S.constant(1), 0.5)


@pytest.mark.parametrize("kw", [dict(family="nope"), dict(family="constant", c=0.0),
                                dict(family="with_remainder", c=1.0, rho=0.0, d=1.0),
                                dict(family="with_remainder", c=1.0, rho=0.5, d=-1.0)])
def test_invalid_families(kw):
    with pytest.raises(ArgumentError):
        S(**kw)


@pytest.mark.parametrize("L", FAMILIES, ids=lambda L: L.family)
def test_positive_and_slowly_varying(L):
    x = np.logspace(0, 8, 33)
    assert np.all(L(x) > 0)
    X = np.logspace(2, 8, 7)
    env = L.remainder_envelope(X)
    for lam in (0.5, 2.0, 10.0):
        dev = np.abs(L(lam * X) / L(X) - 1.0)
        assert dev[-1] < 0.2
        # bounded by the envelope up to a lambda-dependent constant
        if np.any(env > 0):
            assert np.all(dev <= 10.0 * env + 1e-15)
        else:
            assert np.all(dev == 0)


@given(c=st.floats(0.1, 10), rho=st.floats(0.05, 2), d=st.floats(-0.9, 5), x=st.floats(1, 1e12))
def test_excess_matches_direct_ratio(c, rho, d, x):
    L = S.with_remainder(c, rho, d)
    assert float(L.excess(x)) == pytest.approx(float(L(x)) / c - 1.0, rel=1e-9, abs=1e-12)


def test_dict_round_trip():
    for L in FAMILIES:
        assert S.from_dict(L.to_dict()) == L


def test_remainder_form_decreasing():
    for kind, e in (("order_nu", 0.3), ("order_delta", 0.8)):
        r = RemainderForm(kind, e, S.with_remainder(1.0, 0.5, 1.0))
        v = r(np.logspace(0, 8, 20))
        assert np.all(np.diff(v) < 0) and v[-1] < 1e-2


def test_finite_power_integral_examples():
    assert lemma2_quadrature(S.constant(1), 0.5, 1.0, 100.0) == pytest.approx(1.8, abs=1e-10)
    assert lemma2_quadrature(S.constant(1), -0.5, 1.0, 4.0) == pytest.approx(2.0, abs=1e-10)
    assert lemma2_quadrature(S.constant(1), 0.5, 1.0, 1.0 + 1e-9) == pytest.approx(0.0, abs=1e-8)
    assert lemma2_asymptotic(S.constant(1), 0.5, 1.0, 100.0) == pytest.approx(1.8, abs=1e-14)
    assert lemma2_asymptotic(S.constant(1), -0.5, 1.0, 4.0) == pytest.approx(2.0, abs=1e-14)


def test_finite_power_integral_errors():
    with pytest.raises(ArgumentError):
        lemma2_quadrature(S.constant(1), 0.5, 2.0, 1.0)
    with pytest.raises(ArgumentError):
        lemma2_asymptotic(S.constant(1), 0.0, 1.0, 2.0)


@given(sigma=st.one_of(st.floats(0.05, 3), st.floats(-3, -0.05)), c=st.floats(0.5, 10), k=st.floats(1.01, 1e5))
def test_constant_L_formula_is_exact(sigma, c, k):
    L = S.constant(1.7)
    t = c * k
    q = lemma2_quadrature(L, sigma, c, t)
    a = lemma2_asymptotic(L, sigma, c, t)
    assert a == pytest.approx(q, rel=1e-10, abs=1e-10)


def test_tail_formula_examples():
    assert lemma3_asymptotic(S.constant(1), 0.5, 4.0) == pytest.approx(1.0)
    assert lemma3_asymptotic(S.constant(1), 1.0, 10.0) == pytest.approx(0.1)
    assert lemma3_asymptotic(S.constant(2), 0.5, 4.0) == pytest.approx(2.0)
    with pytest.raises(ArgumentError):
        lemma3_asymptotic(S.constant(1), 0.0, 4.0)


@given(sigma=st.floats(0.05, 3), t=st.floats(1, 1e6), L=st.sampled_from(FAMILIES))
def test_tail_formula_identity(sigma, t, L):
    v = lemma3_asymptotic(L, sigma, t)
    assert v * sigma * t**sigma / float(L(t)) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_tail_oracle_for_constant_L(sigma):
    L = S.constant(1.0)
    for t in (1.0, 1e3, 1e6):
        val, tail = lemma3_quadrature(L, sigma, t)
        assert val + tail == pytest.approx(lemma3_asymptotic(L, sigma, t), rel=1e-10)


def test_infinite_power_integral_with_complex_endpoint():
    # int_a^inf y^-(1+s) dy = a^-s / s along the principal branch
    a = 2.0 - 1.0j
    v = power_integral(lambda y: np.ones_like(y), 0.5, a)
    assert v == pytest.approx(a ** (-0.5) / 0.5, rel=1e-12)


def test_complex_finite_power_integral():
    a, b = 1.5 + 0.5j, 40.0 - 3.0j
    v = power_integral(lambda y: np.ones_like(y), -0.3, a, b)
    assert v == pytest.approx((b**0.3 - a**0.3) / 0.3, rel=1e-12)


def test_heavy_tail_raises():
    with pytest.raises(NumericalError):
        power_integral(lambda y: np.ones_like(y), 1e-4, 1.0)
    with pytest.raises(ArgumentError):
        power_integral(lambda y: np.ones_like(y), -0.5, 1.0)
