import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riotfront.equilibria import equilibrium_B
from riotfront.model import (
    DomainError,
    InvalidSpeedError,
    ModelParams,
    brevity_f1,
    brevity_f2,
    decay_h,
    kinetics,
    kinetics_time_rescaled,
    reduced_rhs,
    sigmoid_r,
    switch,
)


def test_sigmoid_at_threshold_is_half_max():
    p = ModelParams(gamma=7.0, omega=0.3)
    assert sigmoid_r(1.0, p) == pytest.approx(0.5 * 7.0 * 0.3, rel=1e-15)


def test_sigmoid_limits():
    p = ModelParams(gamma=4.0, omega=0.1)
    assert sigmoid_r(1e6, p) == pytest.approx(0.4)
    assert sigmoid_r(-1e6, p) == 0.0


def test_sigmoid_value():
    p = ModelParams(gamma=4.0, omega=0.1, beta=1.0)
    assert sigmoid_r(2.0, p) == pytest.approx(0.4 / (1.0 + math.exp(-1.0)), rel=1e-14)


def test_switch_no_overflow_for_steep_sigmoid():
    with np.errstate(over="raise"):
        assert switch(-100.0, 20.0) == pytest.approx(0.0, abs=1e-300)
        assert np.isfinite(switch(np.array([-1e3, 0.0, 1e3]), 20.0)).all()


# beyond |v| ~ 15 the sigmoid saturates in double precision
@given(st.floats(-15, 15), st.floats(-15, 15))
def test_sigmoid_monotone(v1, v2):
    p = ModelParams(gamma=4.0, beta=1.0)
    lo, hi = sorted((v1, v2))
    if hi - lo > 1e-3:
        assert sigmoid_r(lo, p) < sigmoid_r(hi, p)


def test_decay_h():
    assert decay_h(0.0, ModelParams(p=3.3)) == 1.0
    assert decay_h(5.0, ModelParams(p=0.0)) == 1.0
    assert decay_h(1.0, ModelParams(p=2.0)) == pytest.approx(4.0)
    with pytest.raises(DomainError):
        decay_h(-1.0, ModelParams())


def test_kinetics_examples():
    assert tuple(kinetics(0.0, 1.0, ModelParams())) == (0.0, 0.0)
    k = kinetics(1.0, 1.0, ModelParams(omega=0.1, p=2.0))
    assert k.fu == pytest.approx(-0.1)
    assert k.fv == pytest.approx(-3.0)


def test_kinetics_vanish_at_B(steep):
    b = equilibrium_B(steep)
    k = kinetics(b.u_star, b.v_star, steep)
    assert abs(k.fu) < 1e-10 and abs(k.fv) < 1e-10


@given(st.floats(0, 10))
def test_u_axis_invariant(v):
    assert kinetics(0.0, v, ModelParams(gamma=9.0, beta=3.0)).fu == 0.0


def test_time_rescaled_form():
    p = ModelParams(omega=0.25)
    k, kr = kinetics(0.3, 0.7, p), kinetics_time_rescaled(0.3, 0.7, p)
    assert kr.fu == pytest.approx(k.fu / 0.25)
    assert kr.fv == pytest.approx(k.fv / 0.25)


def test_reduced_rhs_examples(base):
    assert tuple(reduced_rhs(0.0, 1.0, base)) == (0.0, 0.0)
    assert reduced_rhs(0.0, 0.3, base)[0] == 0.0
    b = equilibrium_B(base)
    du, dv = reduced_rhs(b.u_star, b.v_star, base)
    assert abs(du) < 1e-10 and abs(dv) < 1e-10


def test_reduced_rhs_needs_speed():
    with pytest.raises(InvalidSpeedError):
        reduced_rhs(0.1, 0.1, ModelParams(c=0.0))


@settings(max_examples=200)
@given(st.floats(0, 1), st.floats(0, 2), st.floats(0.05, 20), st.floats(0.1, 5))
def test_reduced_rhs_matches_kinetics(u, v, omega, c):
    p = ModelParams(gamma=5.0, beta=2.0, p=1.5, omega=omega, c=c)
    k = kinetics(u, v, p)
    du, dv = reduced_rhs(u, v, p)
    assert du == pytest.approx(-k.fu / c, rel=1e-12, abs=1e-14)
    assert dv == pytest.approx(-k.fv / c, rel=1e-12, abs=1e-14)
    assert du == pytest.approx((omega / c) * brevity_f1(u, v, p), rel=1e-12, abs=1e-14)
    assert dv == pytest.approx(brevity_f2(u, v, p) / c, rel=1e-12, abs=1e-14)


def test_params_validation():
    for bad in ({"beta": 0.0}, {"omega": -1.0}, {"c": -1.0}, {"d1": -0.1}, {"gamma": math.nan}):
        with pytest.raises(DomainError):
            ModelParams(**bad)


def test_params_round_trip():
    p = ModelParams(gamma=3.5, beta=0.7, p=-0.2, omega=2.0, alpha=1.1, c=0.3, d1=0.01, d2=0.02)
    assert ModelParams.from_mapping(p.to_dict()) == p
    import json

    assert ModelParams.from_json(json.dumps({**p.to_dict(), "extra": 1})) == p
    assert p.mu == pytest.approx(2.0)
    assert p.delta == pytest.approx(0.5)
