import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import closed_form_F
from mbpi.errors import ArgumentError
from mbpi.kolmogorov import (
    calM,
    extract_coefficients,
    flow_grid_csv,
    flow_R,
    flow_R_direct,
    log_transition_gf_grid,
    norming,
    solve_F,
    transition_coefficients,
    transition_gf,
)
from mbpi.laws import ProcessSpec
from mbpi.slowvar import SlowlyVaryingSpec as S

T_GRID = np.concatenate(([0.0], np.logspace(-2, 4, 25)))
S_GRID = np.array([0.0, 0.25, 0.5, 0.75, 0.9])


@pytest.mark.parametrize("nu", [0.3, 0.5, 0.7])
def test_flow_matches_closed_form(nu):
    sp = ProcessSpec(nu, 0.5)
    R = flow_R(sp, T_GRID, S_GRID)
    exact = closed_form_F(nu, T_GRID[:, None], S_GRID[None, :])
    assert np.max(np.abs((1 - R) - exact)) < 1e-12


def test_flow_boundary_values():
    sp = ProcessSpec(0.3, 0.8)
    assert solve_F(sp, 0.0, 0.4).F == pytest.approx(0.4, abs=1e-15)
    assert solve_F(sp, 5.0, 1.0).F == 1.0
    with pytest.raises(ArgumentError):
        solve_F(sp, -1.0, 0.2)


def test_direct_R_integration_agrees():
    sp = ProcessSpec(0.5, 0.5, S.with_remainder(1.0, 0.5, 0.5), S.constant(1.0))
    t = [0.1, 1.0, 10.0]
    s = [0.0, 0.5]
    assert np.allclose(flow_R(sp, t, s), flow_R_direct(sp, t, s), rtol=1e-8)


@given(t=st.floats(0, 50), s=st.floats(0, 0.99))
def test_flow_monotone_in_s(t, s):
    sp = ProcessSpec(0.4, 0.6, S.with_remainder(1.0, 0.3, 0.5), S.constant(1.0))
    R = flow_R(sp, [t], [s, min(s + 0.005, 0.995)])[0]
    assert R[1] <= R[0]


def test_semigroup_property():
    sp = ProcessSpec(0.4, 0.6, S.with_remainder(1.0, 0.3, 0.5), S.constant(1.0))
    F1 = solve_F(sp, 1.5, 0.3).F
    F2 = solve_F(sp, 2.0, F1).F
    assert F2 == pytest.approx(solve_F(sp, 3.5, 0.3).F, abs=1e-11)


def test_norming_constant_family():
    nf = norming(ProcessSpec(0.5, 0.5), 100.0, 0.5)
    assert nf.tau == pytest.approx(51.0**2, rel=1e-12)
    assert nf.calN == pytest.approx(50.0**2 / 51.0**2, rel=1e-12)


def test_calM_constant_family():
    # int_1^{1/(1-s)} x^(nu-1) dx = ((1-s)^-nu - 1)/nu
    assert calM(ProcessSpec(0.5, 0.5), 0.75) == pytest.approx(2.0, rel=1e-12)


@pytest.mark.parametrize("s", [0.0, 0.3, 0.8, 0.3 + 0.4j, -0.5 + 0.1j])
def test_space_and_time_forms_agree(s):
    sp = ProcessSpec(0.3, 0.8, S.with_remainder(1.0, 0.5, 0.4), S.with_remainder(1.0, 0.2, 0.3))
    t = [0.5, 5.0, 50.0]
    a = log_transition_gf_grid(sp, 2, t, [s], method="space")
    b = log_transition_gf_grid(sp, 2, t, [s], method="time")
    assert np.allclose(a, b, rtol=1e-9, atol=1e-11)


def test_p00_closed_form():
    sp = ProcessSpec(0.3, 0.8)
    for t in (1.0, 100.0):
        expected = np.exp(-(1 / 0.5) * (1 - (1 + 0.3 * t) ** (-0.5 / 0.3)))
        assert transition_gf(sp, 0, t, 0.0) == pytest.approx(expected, rel=1e-12)


def test_extraction_of_known_series():
    sc = extract_coefficients(lambda z: np.exp(z), 20, 0.7, M=256, eval_tol=1e-15)
    from math import factorial

    exact = np.array([1 / factorial(j) for j in range(21)])
    assert np.all(np.abs(sc.coeffs - exact) <= sc.error_bound + 1e-15)
    assert np.max(sc.error_bound) < 1e-9


def test_transition_coefficients_are_a_distribution():
    sp = ProcessSpec(0.3, 0.8)
    p, err = transition_coefficients(sp, 1.0, 2, 16)
    assert np.all(p >= -err - 1e-13)
    assert np.all(p.sum(axis=1) <= 1 + 1e-10)
    assert p[0, 0] == pytest.approx(transition_gf(sp, 0, 1.0, 0.0), abs=1e-12)
    p0, _ = transition_coefficients(sp, 0.0, 2, 4)
    assert np.allclose(p0, np.eye(3, 5), atol=1e-12)


def test_flow_csv_has_header():
    text = flow_grid_csv(ProcessSpec(0.3, 0.8), [1.0, 2.0], [0.0, 0.5], header_lines=["k=v"])
    lines = text.splitlines()
    assert lines[0].startswith("#") and "t,s,F,R,M,tau" in text
