import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ricciquant.errors import ScheduleTooAggressive
from ricciquant.multipliers import (ONE, BorelSchedule, Multiplier, borel_realize, bump,
                                    check_theta_membership, kernel_cochain_function,
                                    load_borel_file, multiplier_from_spec, taylor_match,
                                    tracial_cochain_real_part, tracial_multiplier)
from ricciquant.transforms import TwistParams, phi_xi_inv, twist_jacobian

PROBE = np.linspace(-5, 5, 51)


# --- membership ------------------------------------------------------------------------

def test_unit_multiplier_is_admissible():
    rep = check_theta_membership(ONE)
    assert rep.passed, rep.failed()


def test_quadratic_in_xi_violates_decay_condition():
    rep = check_theta_membership(Multiplier(lambda th, xi: th * xi ** 2 + 0j))
    assert not rep["rescaled_limit_zero"].passed


@pytest.mark.parametrize("n", [0, 1])
def test_tracial_has_polynomial_growth(n):
    assert check_theta_membership(tracial_multiplier(n))["OM_polynomial_growth"].passed


@pytest.mark.xfail(strict=True, reason="the real part of a tracial multiplier does not depend on "
                   "theta after rescaling, so the rescaled sup cannot tend to zero")
@pytest.mark.parametrize("n", [0, 1])
def test_tracial_decay_condition(n):
    assert check_theta_membership(tracial_multiplier(n))["rescaled_limit_zero"].passed


# --- tracial ---------------------------------------------------------------------------

def test_tracial_value_at_origin_is_phase():
    tau = tracial_multiplier(1, psi=lambda th, xi: np.sin(th * xi) + 0.3 * th)
    assert abs(tau(0.1, np.array([0.0]))[0] - 0.03j) < 1e-14


@pytest.mark.parametrize("n", [0, 1, 2])
def test_tracial_modulus_cancels_jacobian(n):
    xi = np.linspace(-20, 20, 101)
    th = 0.1
    tau = tracial_multiplier(n, psi=lambda t, x: np.sin(t * x))
    jac = twist_jacobian(phi_xi_inv(xi, th), TwistParams(th, n))
    assert np.max(np.abs(np.abs(np.exp(tau(th, xi))) ** 2 * jac - 1)) < 1e-12


@pytest.mark.parametrize("n", [0, 1])
def test_tracial_cochain_real_part_closed_form(n):
    t = np.linspace(-2, 2, 41)
    for th in (0.3, 0.05):
        g = kernel_cochain_function(tracial_multiplier(n), th)
        assert np.max(np.abs(g(t).real - tracial_cochain_real_part(n)(t))) < 1e-10


# --- Borel realization -----------------------------------------------------------------

def test_bump_profile():
    s = np.array([0.0, 0.3, 0.5, 0.75, 1.0, 1.5])
    b = bump(s)
    assert b[0] == b[1] == b[2] == 1.0
    assert 0 < b[3] < 1
    assert b[4] == b[5] == 0.0


def test_borel_single_coefficient():
    c1 = lambda xi: 0.3j * xi ** 2
    tau = borel_realize([c1])
    assert taylor_match(tau, [c1], PROBE) < 1e-6


def test_borel_exponential_series_through_fourth_order():
    cs = [(lambda xi, k=k: xi ** k / math.factorial(k)) for k in range(1, 5)]
    tau = borel_realize(cs)
    assert taylor_match(tau, cs, PROBE) < 1e-4
    assert list(tau.cutoffs) == sorted(tau.cutoffs)


def test_borel_zero_coefficients_give_zero():
    tau = borel_realize([None, lambda xi: 0 * xi])
    xi = np.linspace(-20, 20, 101)
    for th in (0.5, 0.01, 0.0):
        assert np.all(tau(th, xi) == 0)


@given(st.floats(1e-6, 1e-2))
@settings(max_examples=25, deadline=None)
def test_borel_vanishes_with_theta(th):
    tau = borel_realize([lambda xi: 0.3j * xi ** 2])
    xi = np.linspace(-20, 20, 101)
    assert np.max(np.abs(tau(th, xi))) <= 0.3 * 400 * th * (1 + 1e-12)


def test_borel_is_cut_off_at_large_theta():
    tau = borel_realize([lambda xi: 0.3j * xi ** 2])
    assert np.all(tau(2 * tau.cutoffs[0], PROBE) == 0)


def test_schedule_too_aggressive():
    cs = [(lambda xi, k=k: xi ** k / math.factorial(k)) for k in range(1, 5)]
    with pytest.raises(ScheduleTooAggressive):
        borel_realize(cs, rel_tol=1e-14)


def test_schedule_respects_bound():
    sched = BorelSchedule()
    assert sched.eps(1, 0.0) == 1.0
    assert sched.eps(2, 0.0) == 0.5
    assert sched.eps(1, 100.0) == pytest.approx(0.005)


# --- presets and files -----------------------------------------------------------------

def test_multiplier_from_spec():
    assert multiplier_from_spec("one", 1) is ONE
    assert multiplier_from_spec("tracial", 0).is_tracial
    tau = multiplier_from_spec("tracial:theta*sin(xi)", 0)
    ref = tracial_multiplier(0, psi=lambda th, xi: th * np.sin(xi))
    assert np.allclose(tau(0.2, PROBE), ref(0.2, PROBE))
    with pytest.raises(ValueError):
        multiplier_from_spec("cubic", 0)
    with pytest.raises(ValueError):
        multiplier_from_spec("tracial:zeta*xi", 0)


def test_load_borel_file_expressions(tmp_path):
    p = tmp_path / "tau.json"
    p.write_text(json.dumps({"coefficients": ["0.3*I*xi**2", None, "xi**3/6"]}))
    tau = load_borel_file(p)
    cs = [lambda xi: 0.3j * xi ** 2, None, lambda xi: xi ** 3 / 6]
    assert taylor_match(tau, cs, PROBE) < 1e-4
    assert multiplier_from_spec(f"borel:{p}", 0).name == "borel"


def test_load_borel_file_samples(tmp_path):
    grid = np.linspace(-10, 10, 401)
    p = tmp_path / "tau.json"
    p.write_text(json.dumps({"coefficients": [list(np.cos(grid))], "xi_grid": [-10, 10, 401]}))
    tau = load_borel_file(p)
    assert taylor_match(tau, [np.cos], PROBE) < 1e-4


def test_load_borel_file_rejects_bad_input(tmp_path):
    p = tmp_path / "tau.json"
    p.write_text(json.dumps({"coefficients": ["xi"], "speed": 3}))
    with pytest.raises(ValueError):
        load_borel_file(p)
    p.write_text(json.dumps({"coefficients": [[1.0, 2.0]]}))
    with pytest.raises(ValueError):
        load_borel_file(p)
