"""Linearization of the reduced planar flow at A and B.

The reduced flow is ``(u', v') = ((omega/c) f1, (1/c) f2)`` with
``f1 = -(gamma S(v) u (1 - u) - u)`` and ``f2 = -(1 - (1 + u)**p v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from riotfront.equilibria import Equilibrium, EquilibriumLabel, equilibrium_A, equilibrium_B
from riotfront.model import DomainError, ModelParams, switch

IMAG_TOL = 1e-12


class SpectrumClass(str, Enum):
    SADDLE = "Saddle"
    UNSTABLE_NODE = "UnstableNode"
    UNSTABLE_SPIRAL = "UnstableSpiral"
    STABLE_NODE = "StableNode"
    STABLE_SPIRAL = "StableSpiral"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class Spectrum:
    lambda1: complex
    lambda2: complex
    classification: SpectrumClass

    @property
    def eigenvalues(self) -> tuple[complex, complex]:
        return (self.lambda1, self.lambda2)


@dataclass(frozen=True)
class PartialsAtB:
    f1u: float
    f1v: float
    f2u: float
    f2v: float


@dataclass(frozen=True)
class OmegaThresholds:
    omega1: float
    omega2: float
    degenerate: bool = False


def classify(lam1: complex, lam2: complex, scale: float | None = None) -> SpectrumClass:
    """Classify a planar equilibrium from its two eigenvalues."""
    if scale is None:
        scale = max(abs(lam1), abs(lam2), 1.0)
    tol = IMAG_TOL * scale
    if abs(lam1.imag) > tol or abs(lam2.imag) > tol:
        if abs(lam1.real) <= tol:
            return SpectrumClass.DEGENERATE
        return SpectrumClass.UNSTABLE_SPIRAL if lam1.real > 0 else SpectrumClass.STABLE_SPIRAL
    a, b = lam1.real, lam2.real
    if abs(a) <= tol or abs(b) <= tol or abs(a - b) <= tol:
        return SpectrumClass.DEGENERATE
    if a * b < 0:
        return SpectrumClass.SADDLE
    return SpectrumClass.UNSTABLE_NODE if a > 0 else SpectrumClass.STABLE_NODE


def jacobian_reduced(point, params: ModelParams) -> np.ndarray:
    """Analytic Jacobian of ``reduced_rhs`` at ``point = (u, v)``."""
    params.require_speed()
    u, v = float(point[0]), float(point[1])
    g, b, p, c, w = params.gamma, params.beta, params.p, params.c, params.omega
    s = float(switch(v, b, params.alpha))
    ds = b * s * (1.0 - s)
    # growth bracket G = g s u (1-u) - u, tension bracket H = 1 - (1+u)^p v
    G_u = g * s * (1.0 - 2.0 * u) - 1.0
    G_v = g * ds * u * (1.0 - u)
    H_u = -p * (1.0 + u) ** (p - 1.0) * v
    H_v = -((1.0 + u) ** p)
    return np.array([[-(w / c) * G_u, -(w / c) * G_v], [-H_u / c, -H_v / c]])


def spectrum_of(matrix: np.ndarray) -> Spectrum:
    """Eigenvalues of a real 2x2 matrix via the trace/determinant formula."""
    tr = float(matrix[0, 0] + matrix[1, 1])
    det = float(matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0])
    disc = tr * tr - 4.0 * det
    root = complex(math.sqrt(disc), 0.0) if disc >= 0 else complex(0.0, math.sqrt(-disc))
    lam1 = complex(0.5 * (tr + root))
    lam2 = complex(0.5 * (tr - root))
    return Spectrum(lam1, lam2, classify(lam1, lam2))


def eigen_A(params: ModelParams) -> Spectrum:
    return spectrum_of(jacobian_reduced((0.0, 1.0), params))


def partials_at_B(params: ModelParams, equilibrium: Equilibrium | None = None) -> PartialsAtB:
    """Partials of (f1, f2) at B, cross-checked between two closed forms.

    The direct forms differentiate the brackets and use only ``vbar``; the
    simplified forms use the equilibrium relation ``gamma S(vbar) (1 - ubar) = 1``.
    """
    eq = equilibrium if equilibrium is not None else equilibrium_B(params)
    if eq.label is not EquilibriumLabel.EXCITED_B:
        raise DomainError("partials_at_B needs the excited equilibrium B")
    ub, vb = eq.u_star, eq.v_star
    if not -1.0 < ub < 1.0:
        raise DomainError(f"ubar={ub} outside (-1, 1)")
    direct = _partials_direct(ub, vb, params)
    simple = _partials_simplified(ub, params)
    for name, a, b in zip("f1u f1v f2u f2v".split(), direct, simple):
        if abs(a - b) > 1e-8 * max(1.0, abs(a)):
            raise ArithmeticError(f"closed forms of {name} disagree at B: {a} vs {b}")
    return PartialsAtB(*direct)


def _partials_direct(ub: float, vb: float, params: ModelParams) -> tuple[float, ...]:
    g, b, p = params.gamma, params.beta, params.p
    e = math.exp(-b * (vb - params.alpha))
    f1u = (g - 1.0 - e) / (1.0 + e)
    f1v = -ub * b * e / (1.0 + e)
    f2u = p * (1.0 + ub) ** (p - 1.0) * vb
    f2v = (1.0 + ub) ** p
    return f1u, f1v, f2u, f2v


def _partials_simplified(ub: float, params: ModelParams) -> tuple[float, ...]:
    g, b, p = params.gamma, params.beta, params.p
    f1u = ub / (1.0 - ub)
    f1v = -b * ub * (g - 1.0 / (1.0 - ub)) / g
    f2u = p / (1.0 + ub)
    f2v = (1.0 + ub) ** p
    return f1u, f1v, f2u, f2v


def discriminant(omega, partials: PartialsAtB):
    """Expression under the root of the B-eigenvalue formula, as a function of omega."""
    d = partials
    return (d.f2v - omega * d.f1u) ** 2 + 4.0 * omega * d.f1v * d.f2u


def eigen_B(params: ModelParams, partials: PartialsAtB | None = None) -> Spectrum:
    """Eigenvalues at B from the closed-form trace/discriminant expression."""
    params.require_speed()
    d = partials if partials is not None else partials_at_B(params)
    w, c = params.omega, params.c
    disc = discriminant(w, d)
    root = complex(math.sqrt(disc), 0.0) if disc >= 0 else complex(0.0, math.sqrt(-disc))
    tr = d.f2v + w * d.f1u
    lam1 = (tr + root) / (2.0 * c)
    lam2 = (tr - root) / (2.0 * c)
    scale = max(abs(lam1), abs(lam2), 1e-300)
    return Spectrum(lam1, lam2, classify(lam1, lam2, scale))


def omega_thresholds(params: ModelParams, partials: PartialsAtB | None = None) -> OmegaThresholds:
    """Bandwagon rates bounding the window where B is a spiral.

    The closed form is confirmed by bracketing roots of the discriminant.
    When p = 0 the window collapses to the single point f2v/f1u and the
    result is flagged degenerate.
    """
    d = partials if partials is not None else partials_at_B(params)
    a, b_, c_ = d.f1u * d.f2v, d.f1v * d.f2u, d.f1u * d.f1v * d.f2u * d.f2v
    under = b_ * b_ - c_
    if params.p == 0 or under <= 0 or d.f2u == 0:
        w0 = d.f2v / d.f1u
        return OmegaThresholds(w0, w0, degenerate=True)
    root = 2.0 * math.sqrt(under)
    w1 = (a - 2.0 * b_ - root) / d.f1u**2
    w2 = (a - 2.0 * b_ + root) / d.f1u**2
    # independent check: the discriminant changes sign at each threshold
    mid = 0.5 * (w1 + w2)
    fun = lambda w: discriminant(w, d)  # noqa: E731
    r1 = brentq(fun, 0.0, mid, xtol=1e-15, rtol=1e-14)
    r2 = brentq(fun, mid, 2.0 * w2 + 1.0, xtol=1e-15, rtol=1e-14)
    if abs(r1 - w1) > 1e-8 * max(1.0, w1) or abs(r2 - w2) > 1e-8 * max(1.0, w2):
        raise ArithmeticError(f"threshold closed form {(w1, w2)} vs root-find {(r1, r2)}")
    return OmegaThresholds(w1, w2)


def spectrum_at(at: str, params: ModelParams) -> Spectrum:
    if at == "A":
        return eigen_A(params)
    if at == "B":
        return eigen_B(params)
    raise ValueError(f"unknown equilibrium {at!r}")


__all__ = [
    "OmegaThresholds",
    "PartialsAtB",
    "Spectrum",
    "SpectrumClass",
    "classify",
    "discriminant",
    "eigen_A",
    "eigen_B",
    "equilibrium_A",
    "jacobian_reduced",
    "omega_thresholds",
    "partials_at_B",
    "spectrum_at",
    "spectrum_of",
]
