"""Constant states A = (0, 1) and B = (ubar, vbar) and the planar nullclines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from riotfront.model import DomainError, ModelParams, kinetics, switch

DEFAULT_TOL = 1e-12


class NoPositiveEquilibrium(DomainError):
    """No constant state with positive unrest exists (gamma <= 2)."""


class EquilibriumLabel(str, Enum):
    RELAXED_A = "RelaxedA"
    EXCITED_B = "ExcitedB"


@dataclass(frozen=True)
class Equilibrium:
    u_star: float
    v_star: float
    label: EquilibriumLabel
    residual: float

    @property
    def point(self) -> np.ndarray:
        return np.array([self.u_star, self.v_star])


def ubar_residual(u, params: ModelParams):
    """gamma - 1 - gamma u - exp(-beta ((1 + u)**-p - alpha)); zero at ubar."""
    v = (1.0 + np.asarray(u, dtype=float)) ** (-params.p)
    rhs = np.exp(-params.beta * (v - params.alpha))
    return params.gamma - 1.0 - params.gamma * u - rhs


def _bisect(fun, lo: float, hi: float, tol: float, max_iter: int = 400) -> float:
    flo = fun(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = fun(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
        if hi - lo <= 2.0 * np.finfo(float).eps * max(1.0, abs(mid)) or (
            abs(fmid) <= 1e-3 * tol and hi - lo <= 1e-3 * tol
        ):
            break
    return 0.5 * (lo + hi)


def solve_ubar(params: ModelParams, tol: float = DEFAULT_TOL) -> float:
    """Unrest level of the excited state B.

    Bisection on ``(0, (gamma - 1)/gamma)``; the residual is ``gamma - 2 > 0``
    at the left end and negative at the right end.  For p < 0 the root is not
    known to be unique, so the interval is scanned and the smallest root is
    returned.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if params.gamma <= 2.0:
        raise NoPositiveEquilibrium(
            f"gamma={params.gamma} <= 2: no equilibrium in the open first quadrant"
        )
    fun = lambda u: float(ubar_residual(u, params))  # noqa: E731
    hi = (params.gamma - 1.0) / params.gamma
    if params.p < 0:
        grid = np.linspace(0.0, hi, 2001)
        vals = ubar_residual(grid, params)
        sign_flip = np.nonzero(np.signbit(vals[1:]) != np.signbit(vals[:-1]))[0]
        if sign_flip.size == 0:
            raise NoPositiveEquilibrium("no sign change of the equilibrium residual on (0, 1)")
        k = int(sign_flip[0])
        return _bisect(fun, float(grid[k]), float(grid[k + 1]), tol)
    return _bisect(fun, 0.0, hi, tol)


def vbar(u_bar, params: ModelParams):
    """Tension level on the v-nullcline, (1 + u)**-p."""
    u_arr = np.asarray(u_bar, dtype=float)
    if np.any(u_arr <= -1.0):
        raise DomainError("vbar requires u > -1")
    out = (1.0 + u_arr) ** (-params.p)
    return out[()] if out.ndim == 0 else out


def nullcline_u_of_v(v, params: ModelParams):
    """Non-trivial u-nullcline u = 1 - (1 + exp(-beta (v - 1)))/gamma."""
    return 1.0 - 1.0 / (params.gamma * switch(v, params.beta, params.alpha))


def _residual(u: float, v: float, params: ModelParams) -> float:
    fu, fv = kinetics(u, v, params)
    return float(max(abs(fu), abs(fv)))


def equilibrium_A(params: ModelParams) -> Equilibrium:
    return Equilibrium(0.0, 1.0, EquilibriumLabel.RELAXED_A, _residual(0.0, 1.0, params))


def equilibrium_B(params: ModelParams, tol: float = DEFAULT_TOL) -> Equilibrium:
    u = solve_ubar(params, tol)
    v = float(vbar(u, params))
    return Equilibrium(u, v, EquilibriumLabel.EXCITED_B, _residual(u, v, params))


def distance_AB(params: ModelParams) -> float:
    b = equilibrium_B(params)
    return math.hypot(b.u_star, b.v_star - 1.0)
