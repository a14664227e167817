"""Scalar Fisher-KPP reduction for slowly diffusing tension.

With the tension slaved to the unrest, ``v = (1 + u)**-p``, the unrest obeys

    u_t = u_xx + f(u),   f(u) = -u (1 - gamma h(u) (1 - u)),

where ``h(u) = 1 / (1 + exp(-beta ((1 + u)**-p - 1)))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from riotfront.equilibria import NoPositiveEquilibrium, solve_ubar
from riotfront.model import DomainError, ModelParams, switch
from riotfront.ode import Event, Termination, Trajectory, integrate


@dataclass(frozen=True)
class KppVerdict:
    guaranteed_by_region: bool
    numeric_concave: bool
    p_threshold: float
    min_speed: float
    max_f2: float


def h_aux(u, params: ModelParams):
    """Switch evaluated on the slow manifold, S((1 + u)**-p)."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= -1.0):
        raise DomainError("h_aux requires u > -1")
    return switch((1.0 + u) ** (-params.p), params.beta, params.alpha)


def f_kpp(u, params: ModelParams):
    """Source term of the scalar reduction."""
    u = np.asarray(u, dtype=float)
    out = -u * (1.0 - params.gamma * h_aux(u, params) * (1.0 - u))
    return out[()] if out.ndim == 0 else out


def fprime_zero(params: ModelParams) -> float:
    return params.gamma / 2.0 - 1.0


def fsecond_zero(params: ModelParams) -> float:
    return -params.gamma * (params.beta * params.p + 2.0) / 2.0


def fprime_ubar(params: ModelParams, u_bar: float | None = None) -> float:
    """Closed-form slope of f at ubar.

    Uses ``gamma h(ubar) (1 - ubar) = 1``; the ``1 - h(ubar)`` factor comes
    from differentiating the switch and is needed for agreement with f.
    """
    ub = solve_ubar(params) if u_bar is None else u_bar
    hb = float(h_aux(ub, params))
    return -ub * (1.0 / (1.0 - ub) + params.p * params.beta * (1.0 - hb) / (1.0 + ub) ** (params.p + 1.0))


def p_threshold(beta: float) -> float:
    """Smallest p for which the quadratic concavity bound holds on (0, 1]."""
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    s = 2.0 * beta + 1.0
    return (s + math.sqrt(s * s + 4.0 * beta * (beta + 1.0))) / (2.0 * beta * (beta + 1.0))


def kpp_region_check(beta: float, p: float) -> tuple[bool, float]:
    """Whether (beta, p) lies in the sufficient region for f'' < 0 on (0, ubar)."""
    if p <= 0:
        raise DomainError("the sufficient region is stated for p > 0 only")
    thr = p_threshold(beta)
    return p >= thr, thr


def region_lower_interval(beta: float) -> tuple[float, float]:
    """The p-interval [p_threshold, 3/(beta + 1)) where the u**2 coefficient of the bound is positive."""
    return p_threshold(beta), 3.0 / (beta + 1.0)


def concavity_bound(u, beta: float, p: float):
    """Quadratic upper bound on a positive multiple of f''."""
    q = 3.0 - (beta + 1.0) * p
    return beta * p * q * u**2 + (3.0 + (beta + 1.0) * p) * u - 2.0 * (1.0 + beta * p)


def bound_roots(beta: float, p: float) -> tuple[float, float]:
    """Roots rho_-, rho_+ of the quadratic bound (NaN when complex)."""
    q = 3.0 - (beta + 1.0) * p
    a = beta * p * q
    b = 3.0 + (beta + 1.0) * p
    disc = b * b + 8.0 * beta * p * q * (1.0 + beta * p)
    if a == 0:
        r = 2.0 * (1.0 + beta * p) / b
        return r, r
    if disc < 0:
        return math.nan, math.nan
    r1 = (-b - math.sqrt(disc)) / (2.0 * a)
    r2 = (-b + math.sqrt(disc)) / (2.0 * a)
    return min(r1, r2), max(r1, r2)


def second_difference(fun: Callable, u: np.ndarray, h: float) -> np.ndarray:
    return (fun(u + h) - 2.0 * fun(u) + fun(u - h)) / (h * h)


def concavity_scan(params: ModelParams, n_samples: int = 1000) -> tuple[bool, float]:
    """Sample f'' on a uniform interior grid of (0, ubar) by central differences.

    Accepts any p > -1/beta; the region test above is only for p > 0.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    if params.beta * params.p + 1.0 <= 0:
        raise DomainError("concavity scan needs beta p + 1 > 0")
    ub = solve_ubar(params)
    grid = ub * np.arange(1, n_samples + 1) / (n_samples + 1)
    h = ub / (10.0 * n_samples)
    f2 = second_difference(lambda x: f_kpp(x, params), grid, h)
    max_f2 = float(f2.max())
    return bool(max_f2 < 0.0), max_f2


def min_speed(gamma: float) -> float:
    """Minimal front speed 2 sqrt(f'(0)) = sqrt(2 (gamma - 2))."""
    if gamma < 2:
        raise DomainError(f"gamma must be at least 2, got {gamma}")
    return math.sqrt(2.0 * (gamma - 2.0))


def kpp_check(params: ModelParams, n_samples: int = 1000) -> KppVerdict:
    if params.p > 0:
        guaranteed, thr = kpp_region_check(params.beta, params.p)
    else:
        guaranteed, thr = False, p_threshold(params.beta)
    concave, max_f2 = concavity_scan(params, n_samples)
    return KppVerdict(guaranteed, concave, thr, min_speed(params.gamma), max_f2)


def gamma0_search(
    beta: float, p: float, gamma_max: float = 1e3, n_samples: int = 1000, iters: int = 40
) -> float:
    """Heuristic largest gamma for which the scan still reports concavity.

    Steps geometrically in gamma - 2 until the scan fails, then bisects.
    Returns ``inf`` when no failure is found below ``gamma_max``.
    """
    def concave(g: float) -> bool:
        return concavity_scan(ModelParams(gamma=g, beta=beta, p=p), n_samples)[0]

    lo = 2.0 + 1e-6
    if not concave(lo):
        return 2.0
    step = 1e-3
    hi = None
    while lo + step <= gamma_max:
        g = 2.0 + (lo - 2.0 + step)
        if not concave(g):
            hi = g
            break
        lo = g
        step *= 2.0
    if hi is None:
        return math.inf
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if concave(mid):
            lo = mid
        else:
            hi = mid
    return lo


def region_sample(
    n: int,
    seed: int = 0,
    n_samples: int = 1000,
    gamma_range: tuple[float, float] = (2.0, 20.0),
    beta_range: tuple[float, float] = (0.5, 30.0),
) -> list[tuple[ModelParams, float]]:
    """Seeded random points of the sufficient region; returns those the scan rejects.

    p is drawn as p_threshold(beta) (1 + U(0, 3)), so every point is in the region.
    """
    rng = np.random.default_rng(seed)
    failures = []
    for _ in range(n):
        g = rng.uniform(*gamma_range)
        b = rng.uniform(*beta_range)
        p = p_threshold(b) * (1.0 + rng.uniform(0.0, 3.0))
        prm = ModelParams(gamma=g, beta=b, p=p)
        ok, m = concavity_scan(prm, n_samples)
        if not ok:
            failures.append((prm, m))
    return failures


# ---------------------------------------------------------------- traveling-wave phase plane


def kpp_phase_rhs(u1, u2, params: ModelParams, v_of_u: Callable | None = None):
    """(u1', u2') of the scalar traveling-wave ODE u'' + c u' + f(u) = 0."""
    params.require_speed()
    v = (1.0 + np.asarray(u1, dtype=float)) ** (-params.p) if v_of_u is None else v_of_u(u1)
    growth = params.gamma * switch(v, params.beta, params.alpha) * u1 * (1.0 - u1)
    return u2, u1 - params.c * u2 - growth


def saddle_eigs_3d(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues at (0, 0, 1) of the three-dimensional slow flow in z = omega xi.

    Returns the numerical eigenvalues of the linearization together with the
    closed forms ``(-omega c +- sqrt(omega^2 c^2 - 2 omega^2 (gamma - 2)))/2``
    and ``1/c``, both sorted by real part.
    """
    params.require_speed()
    w, c, g, p = params.omega, params.c, params.gamma, params.p
    mat = np.array([[0.0, w, 0.0], [-w * (g / 2.0 - 1.0), -w * c, 0.0], [p / c, 0.0, 1.0 / c]])
    num = np.linalg.eigvals(mat)
    root = np.sqrt(complex(w * w * c * c - 2.0 * w * w * (g - 2.0)))
    closed = np.array([(-w * c - root) / 2.0, (-w * c + root) / 2.0, 1.0 / c])
    key = lambda z: (z.real, z.imag)  # noqa: E731
    return np.array(sorted(num.astype(complex), key=key)), np.array(sorted(closed, key=key))


def shoot_kpp_front(
    params: ModelParams, delta_seed: float = 1e-7, u_stop: float = 1e-6, rtol: float = 1e-10, atol: float = 1e-14
) -> Trajectory:
    """Leave (ubar, 0) along its unstable direction toward smaller u, forward in xi."""
    params.require_speed()
    ub = solve_ubar(params)
    fp = fprime_ubar(params, ub)
    lam = 0.5 * (-params.c + math.sqrt(params.c**2 - 4.0 * fp))
    direction = -np.array([1.0, lam]) / math.hypot(1.0, lam)
    seed = np.array([ub, 0.0]) + delta_seed * direction

    def rhs(_xi: float, y: np.ndarray) -> np.ndarray:
        return np.array(kpp_phase_rhs(y[0], y[1], params))

    events = [
        Event(lambda _t, y: y[0] - u_stop * ub, Termination.REACHED_TARGET),
        Event(lambda _t, y: y[0] + 1e-3 * ub, Termination.LEFT_DOMAIN),
    ]
    return integrate(rhs, seed, (0.0, 1e5), rtol=rtol, atol=atol, events=events)


__all__ = [
    "KppVerdict",
    "NoPositiveEquilibrium",
    "bound_roots",
    "concavity_bound",
    "concavity_scan",
    "f_kpp",
    "fprime_ubar",
    "fprime_zero",
    "fsecond_zero",
    "gamma0_search",
    "h_aux",
    "kpp_check",
    "kpp_phase_rhs",
    "kpp_region_check",
    "min_speed",
    "p_threshold",
    "region_lower_interval",
    "region_sample",
    "saddle_eigs_3d",
    "shoot_kpp_front",
]
