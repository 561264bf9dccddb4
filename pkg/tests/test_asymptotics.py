import math

import numpy as np
import pytest

from mbpi.asymptotics import (
    check_ratio_limit,
    fit_decay,
    validate_cor1,
    validate_thm1,
    validate_thm2,
    validate_thm4,
)
from mbpi.errors import ArgumentError, RegimeError
from mbpi.laws import ProcessSpec
from mbpi.slowvar import SlowlyVaryingSpec as S

GRID = np.logspace(1, 4, 13)


def test_fit_decay_recovers_power():
    t = np.logspace(0, 4, 20)
    fit = fit_decay(t, 3.0 * t**-0.7)
    assert fit.exponent == pytest.approx(0.7, abs=1e-12) and fit.residual < 1e-12


def test_grids_must_increase(recurrent):
    with pytest.raises(ArgumentError):
        validate_thm1(recurrent, [10.0, 5.0, 20.0])


def test_recurrent_rate_closed_form(recurrent):
    rep = validate_thm1(recurrent, GRID)
    tau = (1 + 0.3 * GRID) ** (1 / 0.3)
    assert np.allclose(rep.kappa, -(tau**-0.5), rtol=1e-9)
    assert rep.extras["closed_form_max_rel_err"] < 1e-12
    assert rep.passed and abs(rep.fitted_exponent - 5 / 3) < 0.1
    assert np.all(rep.components["kappa_r"] == 0)


def test_recurrent_limit_is_w0(recurrent):
    rep = validate_thm1(recurrent, np.logspace(2, 6, 5))
    assert math.exp(-rep.observed[-1]) == pytest.approx(rep.extras["limit_w0"], rel=1e-6)


def test_recurrent_rejects_transient(exact_transient):
    with pytest.raises(RegimeError, match="gamma > 0"):
        validate_thm1(exact_transient, GRID)


def test_recurrent_remainder_family_has_nonvanishing_kappa():
    sp = ProcessSpec(0.3, 0.8, S.constant(1.0), S.with_remainder(1.0, 0.5, 1.0))
    rep = validate_thm1(sp, np.logspace(2, 6, 9))
    # kappa_r -> d gamma / (gamma + rho) = 0.5
    assert rep.extras["kappa_r_limit"] == pytest.approx(0.5, rel=1e-10)
    assert rep.kappa[-1] == pytest.approx(0.5, abs=1e-3)
    assert np.allclose(rep.kappa, rep.components["kappa_tau"] + rep.components["kappa_r"], atol=1e-10)


def test_transient_rate_closed_form(exact_transient):
    rep = validate_thm2(exact_transient, GRID)
    tau = (1 + 0.6 * GRID) ** (1 / 0.6)
    assert np.allclose(rep.kappa, -(tau**-0.2), rtol=1e-9)
    assert rep.passed and rep.predicted_exponent == pytest.approx(1 / 3)


def test_transient_case_split_reported():
    rep = validate_thm2(ProcessSpec(0.9, 0.2), GRID)
    assert rep.extras["theorem_case"] == "i"
    assert rep.passed
    assert any("differs" in n for n in rep.notes)


def test_transient_decomposition_sums():
    sp = ProcessSpec(0.9, 0.2, S.constant(1.0), S.with_remainder(1.0, 0.2, 1.0))
    rep = validate_thm2(sp, np.logspace(3, 6, 7))
    assert np.allclose(rep.kappa, rep.components["kappa_tau"] + rep.components["kappa_r"], atol=1e-9)


def test_thm4_exact_at_zero(exact_transient):
    rep = validate_thm4(exact_transient, GRID, [0.0])
    assert np.allclose(rep.observed, 1.0, atol=1e-12) and rep.passed


def test_thm4_ratio_converges(exact_transient):
    rep = validate_thm4(exact_transient, GRID, [0.0, 0.5])
    dev = rep.components["sup_dev"]
    assert np.all(np.diff(dev) < 0) and dev[-1] < 2e-3


def test_thm4_guard(recurrent):
    with pytest.raises(RegimeError):
        validate_thm4(recurrent, GRID, [0.0])


def test_cor1_reports_both_limits(exact_transient):
    rep = validate_cor1(exact_transient, GRID)
    assert rep.extras["supports"] == "pi(0)"
    assert rep.extras["B0"] == pytest.approx(1.0)
    assert np.allclose(rep.observed, math.e, rtol=1e-10)


def test_cor1_perturbed_small_remainder():
    sp = ProcessSpec(0.6, 0.4, S.constant(1.0), S.with_remainder(0.2, 0.4, 0.05))
    rep = validate_cor1(sp, np.logspace(3, 4, 3))
    assert np.all(np.abs(rep.observed / rep.extras["pi0"] - 1) < 1e-2)
    assert rep.extras["supports"] == "pi(0)"


def test_ratio_limit(exact_transient, recurrent):
    rep = check_ratio_limit(exact_transient, np.logspace(1, 4, 4), 6)
    assert rep.extras["upsilon"][1] == pytest.approx(0.2, rel=1e-10)
    assert rep.passed and rep.fitted_exponent > 0
    rep = check_ratio_limit(recurrent, np.logspace(0, 3, 4), 6)
    assert rep.observed[-1] < 1e-5


def test_report_serialization(recurrent, tmp_path):
    rep = validate_thm1(recurrent, GRID)
    text = rep.to_csv(["seed=0"])
    assert "t,observed,predicted,ratio,kappa,kappa_tau,kappa_r,in_fit" in text
    assert text == validate_thm1(recurrent, GRID).to_csv(["seed=0"])
    assert "[thm1] PASS" in rep.summary()
    path = rep.plot(tmp_path / "thm1.svg")
    assert path.read_text().lstrip().startswith("<?xml")
