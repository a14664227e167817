import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riotfront.equilibria import (
    EquilibriumLabel,
    NoPositiveEquilibrium,
    equilibrium_A,
    equilibrium_B,
    nullcline_u_of_v,
    solve_ubar,
    ubar_residual,
    vbar,
)
from riotfront.model import ModelParams

# bisection reference values
UBAR_BASE = 0.3556232347
UBAR_STEEP = 0.224105167560


@pytest.mark.parametrize("gamma", [3.0, 4.0, 10.0])
def test_closed_form_at_p0(gamma):
    p = ModelParams(gamma=gamma, p=0.0, beta=2.5)
    assert abs(solve_ubar(p) - (gamma - 2) / gamma) <= 1e-12
    assert vbar(solve_ubar(p), p) == 1.0


def test_gamma_two_has_no_equilibrium():
    with pytest.raises(NoPositiveEquilibrium):
        solve_ubar(ModelParams(gamma=2.0))
    with pytest.raises(NoPositiveEquilibrium):
        equilibrium_B(ModelParams(gamma=1.5))


def test_regression_values(base, steep):
    assert solve_ubar(base) == pytest.approx(UBAR_BASE, abs=1e-10)
    assert solve_ubar(steep) == pytest.approx(UBAR_STEEP, abs=1e-11)
    assert vbar(solve_ubar(steep), steep) == pytest.approx(0.667363634, abs=1e-9)


def test_vbar_trivial():
    assert vbar(0.0, ModelParams(p=3.0)) == 1.0
    assert vbar(0.4, ModelParams(p=0.0)) == 1.0


def test_nullcline():
    assert nullcline_u_of_v(1.0, ModelParams(gamma=4.0)) == pytest.approx(0.5)
    assert nullcline_u_of_v(1.0, ModelParams(gamma=7.0)) == pytest.approx(1 - 2 / 7)


def test_B_on_both_nullclines(steep):
    b = equilibrium_B(steep)
    assert abs(nullcline_u_of_v(b.v_star, steep) - b.u_star) < 1e-8
    assert abs(vbar(b.u_star, steep) - b.v_star) < 1e-12
    assert b.label is EquilibriumLabel.EXCITED_B
    assert b.residual < 1e-10
    assert 0 < b.u_star < 1 and 0 < b.v_star < 1


def test_A():
    a = equilibrium_A(ModelParams())
    assert (a.u_star, a.v_star) == (0.0, 1.0)
    assert a.residual == 0.0
    assert a.label is EquilibriumLabel.RELAXED_A


@settings(max_examples=100)
@given(st.floats(2.05, 50), st.floats(0.1, 30), st.floats(0.05, 5))
def test_bracket_signs_and_residual(gamma, beta, p):
    params = ModelParams(gamma=gamma, beta=beta, p=p)
    assert ubar_residual(0.0, params) > 0
    assert ubar_residual((gamma - 1) / gamma, params) < 0
    u = solve_ubar(params)
    assert 0 < u < (gamma - 1) / gamma
    assert abs(ubar_residual(u, params)) <= 1e-12 * gamma


def test_increasing_near_two():
    gs = 2.0 + np.array([1e-3, 2e-3, 4e-3, 8e-3])
    us = [solve_ubar(ModelParams(gamma=g, beta=1.0, p=2.0)) for g in gs]
    assert us[0] < 1e-2
    assert np.all(np.diff(us) > 0)


def test_negative_p_smallest_root():
    params = ModelParams(gamma=4.0, beta=1.0, p=-0.5)
    u = solve_ubar(params)
    assert 0 < u < 1
    assert abs(ubar_residual(u, params)) < 1e-10
