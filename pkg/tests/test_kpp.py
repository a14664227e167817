import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riotfront.equilibria import solve_ubar
from riotfront.kpp import (
    bound_roots,
    concavity_bound,
    concavity_scan,
    f_kpp,
    fprime_ubar,
    fprime_zero,
    fsecond_zero,
    gamma0_search,
    h_aux,
    kpp_check,
    kpp_phase_rhs,
    kpp_region_check,
    min_speed,
    p_threshold,
    region_lower_interval,
    saddle_eigs_3d,
    second_difference,
    shoot_kpp_front,
)
from riotfront.model import DomainError, ModelParams, kinetics
from riotfront.ode import Termination


def P(gamma, beta, p, **kw):
    return ModelParams(gamma=gamma, beta=beta, p=p, **kw)


@pytest.mark.parametrize("g,b,p", [(4, 1, 2), (4, 3, 1), (1000, 20, 2), (3, 0.5, 0.0)])
def test_source_zeros(g, b, p):
    prm = P(g, b, p)
    assert f_kpp(0.0, prm) == 0.0
    assert abs(f_kpp(solve_ubar(prm), prm)) < 1e-12
    u = np.linspace(1e-3, solve_ubar(prm) * 0.999, 200)
    assert np.all(f_kpp(u, prm) > 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(2.1, 50), st.floats(0.1, 30), st.floats(0, 5), st.floats(0.01, 0.99))
def test_source_is_kinetics_on_slow_manifold(g, b, p, u):
    prm = P(g, b, p, omega=0.7)
    fu, _ = kinetics(u, (1 + u) ** -p, prm)
    assert f_kpp(u, prm) == pytest.approx(fu / prm.omega, rel=1e-12, abs=1e-14)


def test_h_decreasing_and_positive():
    prm = P(4, 3, 1)
    u = np.linspace(0, 1, 400)
    h = h_aux(u, prm)
    assert h[0] == pytest.approx(0.5)
    assert np.all(np.diff(h) < 0) and np.all(h > 0)
    with pytest.raises(DomainError):
        h_aux(-1.0, prm)


@pytest.mark.parametrize(
    "g,b,p,expected", [(4, 1, 2, -0.726620), (4, 3, 1, -0.708714), (1000, 20, 2, -5.169686), (4, 1, 0, -1.0)]
)
def test_fprime_ubar(g, b, p, expected):
    prm = P(g, b, p)
    ub = solve_ubar(prm)
    h = 1e-6
    fd = (f_kpp(ub + h, prm) - f_kpp(ub - h, prm)) / (2 * h)
    assert fprime_ubar(prm) == pytest.approx(fd, rel=1e-6)
    assert fprime_ubar(prm) == pytest.approx(expected, abs=1e-5)


@pytest.mark.parametrize("g,b,p", [(4, 1, 2), (4, 3, 1), (7, 0.5, 0.2)])
def test_derivatives_at_zero(g, b, p):
    prm = P(g, b, p)
    h = 1e-5
    assert (f_kpp(h, prm) - f_kpp(-h, prm)) / (2 * h) == pytest.approx(fprime_zero(prm), rel=1e-8)
    f2 = second_difference(lambda x: f_kpp(x, prm), np.array([0.0]), 1e-4)[0]
    assert f2 == pytest.approx(fsecond_zero(prm), rel=1e-5)


def test_threshold_values():
    assert p_threshold(2.0) == pytest.approx(1.0)
    assert p_threshold(3.0) == pytest.approx(0.70204, abs=1e-5)
    with pytest.raises(DomainError):
        p_threshold(0.0)


def test_region_check():
    assert kpp_region_check(3.0, 1.0) == (True, pytest.approx(0.70204, abs=1e-5))
    assert not kpp_region_check(3.0, 0.5)[0]
    with pytest.raises(DomainError):
        kpp_region_check(3.0, 0.0)


def test_lower_interval():
    lo, hi = region_lower_interval(1.0)
    assert lo >= hi
    lo, hi = region_lower_interval(5.0)
    assert lo < hi


@pytest.mark.parametrize("b,p", [(3.0, 0.8), (5.0, 0.4), (10.0, 0.5)])
def test_bound_roots(b, p):
    r = bound_roots(b, p)
    for x in r:
        if not math.isnan(x):
            assert concavity_bound(x, b, p) == pytest.approx(0.0, abs=1e-9)
    # at threshold and above, the bound is non-positive on [0, 1]
    u = np.linspace(0, 1, 101)
    assert np.all(concavity_bound(u, b, max(p, p_threshold(b))) <= 1e-12)


def test_concavity_scan_in_region():
    ok, mx = concavity_scan(P(4, 3, 1))
    assert ok and mx < 0
    with pytest.raises(ValueError):
        concavity_scan(P(4, 3, 1), n_samples=10)


def test_min_speed():
    assert min_speed(2.0) == 0.0
    assert min_speed(4.0) == pytest.approx(2.0)
    assert min_speed(4.0) == pytest.approx(2 * math.sqrt(fprime_zero(P(4, 1, 1))))
    with pytest.raises(DomainError):
        min_speed(1.9)


def test_kpp_check():
    v = kpp_check(P(4, 2, 1))
    assert v.guaranteed_by_region and v.numeric_concave
    assert v.p_threshold == pytest.approx(1.0) and v.min_speed == pytest.approx(2.0)
    assert not kpp_check(P(4, 2, 0.0)).guaranteed_by_region


def test_region_not_sufficient_counterexample():
    # inside the region, yet f is convex just below ubar
    prm = P(19.66, 20.72, 0.336)
    assert kpp_region_check(prm.beta, prm.p)[0]
    ub = solve_ubar(prm)
    f2 = second_difference(lambda x: f_kpp(x, prm), np.array([0.999 * ub]), 1e-6 * ub)[0]
    assert f2 > 1.0
    assert not kpp_check(prm).numeric_concave


def test_counterexample_at_high_precision():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    g, b, p = mpmath.mpf("19.66"), mpmath.mpf("20.72"), mpmath.mpf("0.336")

    def f(u):
        h = 1 / (1 + mpmath.exp(-b * ((1 + u) ** -p - 1)))
        return -u * (1 - g * h * (1 - u))

    ub = mpmath.findroot(lambda u: g * (1 / (1 + mpmath.exp(-b * ((1 + u) ** -p - 1)))) * (1 - u) - 1, solve_ubar(P(19.66, 20.72, 0.336)))
    assert float(ub) == pytest.approx(solve_ubar(P(19.66, 20.72, 0.336)), rel=1e-10)
    f2 = mpmath.diff(f, mpmath.mpf("0.999") * ub, 2)
    assert f2 > 2


def test_gamma0_search():
    assert gamma0_search(3.0, 1.0, gamma_max=50) == math.inf
    g0 = gamma0_search(5.0, 4 * p_threshold(5.0))
    assert 14.0 < g0 < 15.0
    assert concavity_scan(P(g0 - 0.1, 5.0, 4 * p_threshold(5.0)))[0]
    assert not concavity_scan(P(g0 + 0.1, 5.0, 4 * p_threshold(5.0)))[0]


def test_phase_plane_equilibria():
    prm = P(4, 3, 1, c=2.0)
    ub = solve_ubar(prm)
    assert kpp_phase_rhs(0.0, 0.0, prm) == (0.0, 0.0)
    a, b = kpp_phase_rhs(ub, 0.0, prm)
    assert a == 0.0 and abs(b) < 1e-12
    with pytest.raises(Exception):
        kpp_phase_rhs(0.1, 0.0, P(4, 3, 1, c=0.0))


@pytest.mark.parametrize("c", [2.0, 3.0])
def test_shot_front_monotone(c):
    prm = P(4, 3, 1, c=c)
    tr = shoot_kpp_front(prm)
    assert tr.termination is Termination.REACHED_TARGET
    u1, u2 = tr.states[:, 0], tr.states[:, 1]
    assert np.all(np.diff(u1) < 0)
    assert np.all(u2 <= 0)


@pytest.mark.parametrize("g,c,w", [(4, 3, 0.5), (10, 2, 1.0), (4, 1, 2.0)])
def test_saddle_eigs(g, c, w):
    num, closed = saddle_eigs_3d(P(g, 2, 1, omega=w, c=c))
    np.testing.assert_allclose(num, closed, atol=1e-12)
