"""Singular-limit flows, rotated-field angle and heteroclinic shooting.

All flows are in the traveling coordinate xi = x - c t.  The planar system

    u' = -(omega/c) (gamma S(v) u (1 - u) - u)
    v' = -(1/c) (1 - (1 + u)**p v)

has the saddle A = (0, 1) and the unstable node/spiral B = (ubar, vbar).  The
front is the branch of the stable manifold of A that, followed backward in
xi, lands on B.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from riotfront.equilibria import equilibrium_B, nullcline_u_of_v, vbar
from riotfront.model import (
    DomainError,
    ModelParams,
    brevity_f1,
    brevity_f2,
    growth_bracket,
    reduced_rhs,
    switch,
    tension_bracket,
)
from riotfront.ode import Event, IntegrationError, Termination, Trajectory, integrate
from riotfront.spectra import eigen_B, jacobian_reduced


class InvalidOmega(DomainError):
    pass


class SeedBranchError(RuntimeError):
    """The seeded branch of the stable manifold leaves the first quadrant."""


class UndefinedAngle(DomainError):
    pass


class Approach(str, Enum):
    MONOTONE = "Monotone"
    OSCILLATORY = "Oscillatory"


@dataclass
class HeteroclinicResult:
    orbit: Trajectory
    connected: bool
    approach: Approach
    distance_to_B: float
    capture_index: int | None = None
    crossing: tuple[float, float] | None = None

    @property
    def capture_xi(self) -> float | None:
        return None if self.capture_index is None else float(self.orbit.xi[self.capture_index])


# ---------------------------------------------------------------- omega -> 0


def slow_manifold_v(u, params: ModelParams):
    """Critical manifold of the omega -> 0 limit, v = (1 + u)**-p."""
    return vbar(u, params)


def flow_omega0_rhs(u, params: ModelParams):
    """Reduced flow on v = (1 + u)**-p in the stretched variable eta = omega xi."""
    params.require_speed()
    s = switch(slow_manifold_v(u, params), params.beta, params.alpha)
    return -(1.0 / params.c) * u * (params.gamma * s * (1.0 - u) - 1.0)


def normal_eigenvalue_omega0(u, params: ModelParams):
    """Eigenvalue transverse to v = (1 + u)**-p when omega = 0."""
    params.require_speed()
    return (1.0 + np.asarray(u, dtype=float)) ** params.p / params.c


# ---------------------------------------------------------------- omega -> inf


def flow_s1_rhs(v, params: ModelParams):
    """Reduced flow on the line u = 0 in the fast variable z = xi/delta."""
    params.require_speed()
    return -(1.0 / params.c) * (1.0 - np.asarray(v, dtype=float))


def s2_curve_u(v, params: ModelParams):
    """The curve gamma S(v) (1 - u) = 1, identical to the u-nullcline."""
    return nullcline_u_of_v(v, params)


def flow_s2_rhs(v, params: ModelParams, delta: float):
    """Reduced flow along the curve gamma S(v) (1 - u) = 1 for delta = 1/omega."""
    params.require_speed()
    if delta < 0:
        raise DomainError("delta must be non-negative")
    base = 1.0 + s2_curve_u(v, params)
    if np.any(np.asarray(base) <= 0):
        raise DomainError("2 - (1 + exp(-beta (v - 1)))/gamma must be positive")
    return (delta / params.c) * (-1.0 + base**params.p * np.asarray(v, dtype=float))


# ---------------------------------------------------------------- rotated field


def rotation_angle(u, v, params: ModelParams) -> tuple[float, float]:
    """Direction angle of (omega f1, f2) and its derivative in omega."""
    f1 = float(brevity_f1(u, v, params))
    f2 = float(brevity_f2(u, v, params))
    w = params.omega
    denom = w * w * f1 * f1 + f2 * f2
    if denom == 0.0:
        raise UndefinedAngle(f"vector field vanishes at ({u}, {v})")
    return math.atan2(f2, w * f1), -f1 * f2 / denom


def above_both_nullclines(u, v, params: ModelParams):
    """True where f1 < 0 and f2 > 0 (u between 0 and the u-nullcline, v above vbar(u))."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (u > 0) & (u < nullcline_u_of_v(v, params)) & (v > (1.0 + u) ** (-params.p))


# ---------------------------------------------------------------- shooting


def _planar_rhs(params: ModelParams):
    w_c = params.omega / params.c
    inv_c = 1.0 / params.c

    def rhs(_xi: float, y: np.ndarray) -> np.ndarray:
        u, v = y[0], y[1]
        return np.array([-w_c * growth_bracket(u, v, params), -inv_c * tension_bracket(u, v, params)])

    return rhs


def stable_direction_A(params: ModelParams) -> np.ndarray:
    """Unit stable eigenvector of the reduced Jacobian at A with positive u."""
    jac = jacobian_reduced((0.0, 1.0), params)
    lam_s, lam_u = jac[0, 0], jac[1, 1]
    if lam_s >= 0:
        raise DomainError("A has no stable direction (gamma <= 2)")
    vec = np.array([lam_u - lam_s, -jac[1, 0]])
    vec /= np.linalg.norm(vec)
    return vec if vec[0] > 0 else -vec


def count_sign_changes(values: np.ndarray) -> int:
    signs = np.sign(values)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def classify_approach(orbit: Trajectory, u_bar: float, start: int = 0) -> Approach:
    """Oscillatory when u - ubar changes sign at least twice from ``start`` on.

    ``start`` is normally the index where the orbit entered the capture ball,
    so only the approach in the vicinity of B is inspected.
    """
    flips = count_sign_changes(orbit.states[start:, 0] - u_bar)
    return Approach.OSCILLATORY if flips >= 2 else Approach.MONOTONE


def domain_box(params: ModelParams, v_bar: float) -> tuple[float, float, float, float]:
    return (-0.05, 1.5, 0.0, 5.0 * max(1.0, v_bar))


def nullcline_crossing(
    orbit: Trajectory, params: ModelParams, stop: int | None = None
) -> tuple[float, float] | None:
    """First point, walking away from A, where the orbit meets the u-nullcline."""
    u, v = orbit.states[:stop, 0], orbit.states[:stop, 1]
    gap = u - nullcline_u_of_v(v, params)
    idx = np.nonzero(np.sign(gap[1:]) != np.sign(gap[:-1]))[0]
    idx = idx[gap[idx] != 0]
    if idx.size == 0:
        return None
    k = int(idx[0])
    t = gap[k] / (gap[k] - gap[k + 1])
    return (float(u[k] + t * (u[k + 1] - u[k])), float(v[k] + t * (v[k + 1] - v[k])))


def shoot_heteroclinic(
    params: ModelParams,
    delta_seed: float = 1e-6,
    capture_radius: float = 1e-3,
    rtol: float = 1e-10,
    atol: float = 1e-13,
    tail_floor: float = 1e-12,
    max_steps: int = 400_000,
) -> HeteroclinicResult:
    """Follow the stable manifold of A backward in xi and test capture by B.

    ``capture_radius`` and ``tail_floor`` are relative to |B - A|.  After the
    capture ball is entered the orbit is continued toward B until the gap
    drops to ``tail_floor`` so the approach (monotone or spiralling) can be
    read from the orbit itself.
    """
    params.require_speed()
    if params.omega <= 0:
        raise InvalidOmega("omega must be positive; use flow_omega0_rhs for the omega -> 0 limit")
    if not 0 < delta_seed < 1:
        raise ValueError("delta_seed must lie in (0, 1)")
    eq_b = equilibrium_B(params)
    b = eq_b.point
    ab = math.hypot(b[0], b[1] - 1.0)
    e_s = stable_direction_A(params)
    seed = np.array([0.0, 1.0]) + delta_seed * e_s
    rhs = _planar_rhs(params)
    back = rhs(0.0, seed)
    # backward flow is -rhs; the branch must move into u > 0
    if seed[0] <= 0 or seed[1] <= 0 or -back[0] <= 0:
        raise SeedBranchError(f"seed {seed} does not enter the first quadrant")

    u_lo, u_hi, v_lo, v_hi = domain_box(params, eq_b.v_star)
    r_cap = capture_radius * ab
    events = [
        Event(lambda _t, y: math.hypot(y[0] - b[0], y[1] - b[1]) - r_cap, Termination.REACHED_TARGET),
        Event(
            lambda _t, y: min(y[0] - u_lo, u_hi - y[0], y[1] - v_lo, v_hi - y[1]),
            Termination.LEFT_DOMAIN,
        ),
    ]
    jac_a = jacobian_reduced((0.0, 1.0), params)
    rate = min(abs(jac_a[0, 0]), abs(jac_a[1, 1]))
    rate = min(rate, eigen_B(params).lambda2.real)
    horizon = 200.0 * (math.log(1.0 / delta_seed) + math.log(1.0 / tail_floor)) / rate

    orbit = integrate(rhs, seed, (0.0, -horizon), rtol=rtol, atol=atol, events=events, max_steps=max_steps)
    if orbit.termination in (Termination.STEP_UNDERFLOW, Termination.MAX_STEPS):
        raise IntegrationError(f"shooting stopped early: {orbit.termination.value}")
    connected = orbit.termination is Termination.REACHED_TARGET
    capture_index = len(orbit) - 1 if connected else None
    if connected:
        r_floor = tail_floor * ab

        def shifted(xi: float, z: np.ndarray) -> np.ndarray:
            return rhs(xi, z + b)

        # deviation coordinates so the tolerances resolve the approach to B
        tail = integrate(
            shifted,
            orbit.final - b,
            (orbit.xi[-1], orbit.xi[-1] - horizon),
            rtol=1e-9,
            atol=1e-3 * r_floor,
            events=[Event(lambda _t, z: math.hypot(z[0], z[1]) - r_floor)],
            max_steps=max_steps,
        )
        orbit = Trajectory(
            np.concatenate([orbit.xi, tail.xi[1:]]),
            np.concatenate([orbit.states, tail.states[1:] + b]),
            Termination.REACHED_TARGET,
            orbit.n_rhs + tail.n_rhs,
        )
    dist = float(np.hypot(*(orbit.final - b)))
    if connected:
        approach = classify_approach(orbit, eq_b.u_star, start=capture_index)
        crossing = nullcline_crossing(orbit, params, stop=capture_index + 1)
    else:
        approach, crossing = Approach.MONOTONE, nullcline_crossing(orbit, params)
    return HeteroclinicResult(
        orbit=orbit,
        connected=connected,
        approach=approach,
        distance_to_B=dist,
        capture_index=capture_index,
        crossing=crossing,
    )


# ---------------------------------------------------------------- four-dimensional slow system


def slow_system_rhs(params: ModelParams, eps: float, mu: float = 1.0):
    """Vector field of the first-order traveling-wave system with small diffusion.

    State ``(u1, u2, v1, v2)`` with d1 = eps and d2 = mu * eps.
    """
    params.require_speed()
    if eps <= 0 or mu <= 0:
        raise DomainError("eps and mu must be positive")
    c, w = params.c, params.omega

    def rhs(_xi: float, y: np.ndarray) -> np.ndarray:
        u1, u2, v1, v2 = y
        return np.array(
            [
                u2,
                (-c * u2 - w * growth_bracket(u1, v1, params)) / eps,
                v2,
                (-c * v2 - tension_bracket(u1, v1, params)) / (eps * mu),
            ]
        )

    return rhs


def critical_manifold_lift(u, v, params: ModelParams) -> np.ndarray:
    """Point of the eps = 0 slow manifold above the planar point (u, v)."""
    params.require_speed()
    c = params.c
    return np.array(
        [u, -(params.omega / c) * growth_bracket(u, v, params), v, -tension_bracket(u, v, params) / c]
    )


def critical_manifold_residual(state, params: ModelParams) -> np.ndarray:
    """Distance of (u2, v2) from their eps = 0 closure values."""
    u1, u2, v1, v2 = (np.asarray(s, dtype=float) for s in state)
    lift = critical_manifold_lift(u1, v1, params)
    return np.array([u2 - lift[1], v2 - lift[3]])


@dataclass
class PersistenceRun:
    eps: float
    max_deviation: float
    xi: np.ndarray
    deviation: np.ndarray


def _central_jacobian(fun, y: np.ndarray, h: float = 1e-7) -> np.ndarray:
    cols = []
    for k in range(len(y)):
        e = np.zeros_like(y)
        e[k] = h
        cols.append((fun(0.0, y + e) - fun(0.0, y - e)) / (2 * h))
    return np.array(cols).T


def _left_eigvecs(jac: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    from scipy.linalg import eig

    w, vl, _ = eig(jac, left=True, right=True)
    return w, vl


def _orbit_segment(result: HeteroclinicResult, params: ModelParams, r_start: float, r_end: float):
    """Forward-xi piece of the reduced orbit from the circle |P - B| = r_start to |P - A| = r_end."""
    b = equilibrium_B(params).point
    xi = result.orbit.xi[::-1]
    pts = result.orbit.states[::-1]
    d_b = np.hypot(pts[:, 0] - b[0], pts[:, 1] - b[1])
    d_a = np.hypot(pts[:, 0], pts[:, 1] - 1.0)
    i0 = int(np.argmax(d_b >= r_start))
    i1 = len(xi) - 1 - int(np.argmax((d_a >= r_end)[::-1]))
    if i1 <= i0 + 2:
        raise ValueError("reduced orbit segment is too short")
    return xi[i0 : i1 + 1] - xi[i0], pts[i0 : i1 + 1].T.copy()


def persistence_deviation(
    params: ModelParams,
    eps: float,
    mu: float = 1.0,
    result: HeteroclinicResult | None = None,
    r_start: float = 0.05,
    r_end: float = 1e-3,
    tol: float = 1e-9,
    n_samples: int = 2000,
) -> PersistenceRun:
    """Gap between the planar heteroclinic and the small-diffusion 4-D one.

    Both connections are computed as boundary-value problems on the same
    xi-interval, seeded by the shot planar orbit (lifted onto the eps = 0
    manifold for the 4-D problem).  Left end: on the circle of radius
    ``r_start |B - A|`` around B, and for the 4-D problem also free of the
    fast stable directions of B.  Right end: no component along the unstable
    direction of A.  Integrating the 4-D system as an initial-value problem
    is hopeless in either direction (fast modes one way, the repelling slow
    manifold the other), hence the collocation.
    """
    from scipy.integrate import solve_bvp

    if result is None:
        result = shoot_heteroclinic(params)
    b = equilibrium_B(params).point
    ab = math.hypot(b[0], b[1] - 1.0)
    r0 = r_start * ab
    x, y2 = _orbit_segment(result, params, r0, r_end * ab)

    planar = _planar_rhs(params)
    a2 = np.array([0.0, 1.0])
    w, vl = _left_eigvecs(jacobian_reduced(a2, params))
    lu2 = np.real(vl[:, int(np.argmax(w.real))])

    def bc2(ya, yb):
        return np.array([(ya[0] - b[0]) ** 2 + (ya[1] - b[1]) ** 2 - r0**2, lu2 @ (yb - a2)])

    sol2 = solve_bvp(lambda _x, y: planar(0.0, y), bc2, x, y2, tol=tol, max_nodes=500_000)

    full = slow_system_rhs(params, eps, mu)
    a4 = np.array([0.0, 0.0, 1.0, 0.0])
    b4 = np.array([b[0], 0.0, b[1], 0.0])
    w, vl = _left_eigvecs(_central_jacobian(full, a4))
    lu4 = np.real(vl[:, int(np.argmax(w.real))])
    w, vl = _left_eigvecs(_central_jacobian(full, b4))
    ls4 = np.real(vl[:, np.argsort(w.real)[:2]]).T

    def bc4(ya, yb):
        return np.array(
            [(ya[0] - b[0]) ** 2 + (ya[2] - b[1]) ** 2 - r0**2, *(ls4 @ (ya - b4)), lu4 @ (yb - a4)]
        )

    y4 = critical_manifold_lift(y2[0], y2[1], params)
    sol4 = solve_bvp(lambda _x, y: full(0.0, y), bc4, x, y4, tol=tol, max_nodes=2_000_000)
    for sol in (sol2, sol4):
        if sol.status != 0:
            raise IntegrationError(f"boundary-value solve failed: {sol.message}")
    grid = np.linspace(0.0, x[-1], n_samples)
    p2 = sol2.sol(grid)
    p4 = sol4.sol(grid)
    dev = np.hypot(p4[0] - p2[0], p4[2] - p2[1])
    return PersistenceRun(eps, float(dev.max()), grid, dev)


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    return float(np.polyfit(np.log(np.asarray(xs)), np.log(np.asarray(ys)), 1)[0])
