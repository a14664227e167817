"""Model parameters and the reaction terms of the unrest/tension system.

The kinetics are written in the omega-scaled form

    u_t = d1 u_xx + omega * (gamma * S(v) * u * (1 - u) - u)
    v_t = d2 v_xx + 1 - (1 + u)**p * v

with the logistic switch ``S(v) = 1 / (1 + exp(-beta * (v - alpha)))``.
Everything here is a pure function of its arguments and works on scalars or
numpy arrays alike.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Any, Mapping, NamedTuple

import numpy as np

# exp(709) is the largest finite double; past this the switch is saturated
_EXP_CAP = 700.0

PARAM_KEYS = ("gamma", "beta", "p", "omega", "alpha", "c", "d1", "d2")


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class InvalidSpeedError(DomainError):
    """Raised when an analysis operation needs a strictly positive speed."""


@dataclass(frozen=True)
class ModelParams:
    """Parameter tuple of the model.

    ``gamma`` is the growth ratio Gamma/omega, so the bandwagon rate of the
    original model is ``gamma * omega``.  ``alpha`` is the switch threshold;
    the decay coefficient in front of ``(1 + u)**p`` is fixed to one.
    """

    gamma: float = 4.0
    beta: float = 1.0
    p: float = 2.0
    omega: float = 1.0
    alpha: float = 1.0
    c: float = 1.0
    d1: float = 1.0
    d2: float = 1.0

    def __post_init__(self) -> None:
        for key in PARAM_KEYS:
            value = getattr(self, key)
            if not math.isfinite(value):
                raise DomainError(f"{key} must be finite, got {value!r}")
        if self.beta <= 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if self.omega < 0:
            raise DomainError(f"omega must be non-negative, got {self.omega}")
        if self.c < 0:
            raise DomainError(f"c must be non-negative, got {self.c}")
        if self.d1 < 0 or self.d2 < 0:
            raise DomainError("diffusion coefficients must be non-negative")

    def replace(self, **changes: float) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    @property
    def mu(self) -> float:
        """Diffusion ratio d2/d1."""
        return self.d2 / self.d1

    @property
    def delta(self) -> float:
        """Inverse bandwagon rate 1/omega."""
        return math.inf if self.omega == 0 else 1.0 / self.omega

    def to_dict(self) -> dict[str, float]:
        return {key: float(getattr(self, key)) for key in PARAM_KEYS}

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ModelParams":
        """Build from a flat key/value mapping; unknown keys are ignored."""
        kwargs = {k: float(data[k]) for k in PARAM_KEYS if k in data and data[k] is not None}
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_mapping(json.loads(text))

    def require_speed(self) -> None:
        if self.c <= 0:
            raise InvalidSpeedError(f"wave speed must be positive, got c={self.c}")


class KineticsValue(NamedTuple):
    fu: Any
    fv: Any


def switch(v, beta: float, alpha: float = 1.0):
    """Logistic switch 1/(1 + exp(-beta (v - alpha))) with overflow guard."""
    z = np.asarray(-beta * (np.asarray(v, dtype=float) - alpha))
    # past the cap the exact value underflows to 0 anyway
    out = np.where(z > _EXP_CAP, 0.0, 1.0 / (1.0 + np.exp(np.minimum(z, _EXP_CAP))))
    return out[()] if out.ndim == 0 else out


def sigmoid_r(v, params: ModelParams):
    """Bandwagon rate r(v) = omega * gamma / (1 + exp(-beta (v - alpha)))."""
    return params.omega * params.gamma * switch(v, params.beta, params.alpha)


def decay_h(u, params: ModelParams):
    """Tension decay factor (1 + u)**p."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= -1.0):
        raise DomainError("decay_h requires u > -1")
    out = (1.0 + u_arr) ** params.p
    return out[()] if out.ndim == 0 else out


def growth_bracket(u, v, params: ModelParams):
    """gamma * S(v) * u * (1 - u) - u, the unscaled u-kinetics."""
    return params.gamma * switch(v, params.beta, params.alpha) * u * (1.0 - u) - u


def tension_bracket(u, v, params: ModelParams):
    """1 - (1 + u)**p v, the v-kinetics."""
    return 1.0 - decay_h(u, params) * v


def kinetics(u, v, params: ModelParams) -> KineticsValue:
    """Reaction terms of the omega-scaled system."""
    return KineticsValue(
        params.omega * growth_bracket(u, v, params),
        tension_bracket(u, v, params),
    )


def kinetics_time_rescaled(u, v, params: ModelParams) -> KineticsValue:
    """Reaction terms after rescaling time by omega (and space by sqrt(omega)).

    The u-kinetics lose their omega factor and the v-kinetics gain 1/omega.
    """
    if params.omega == 0:
        raise DomainError("time rescaling needs omega > 0")
    fu, fv = kinetics(u, v, params)
    return KineticsValue(fu / params.omega, fv / params.omega)


def reduced_rhs(u, v, params: ModelParams):
    """Slow flow on the critical manifold in the traveling coordinate.

    Returns ``(du/dxi, dv/dxi) = (-(omega/c) G(u, v), -(1/c) H(u, v))``
    where G and H are the u- and v-kinetics brackets.
    """
    params.require_speed()
    c = params.c
    return (
        -(params.omega / c) * growth_bracket(u, v, params),
        -tension_bracket(u, v, params) / c,
    )


def brevity_f1(u, v, params: ModelParams):
    """f1 = -(gamma S(v) u (1 - u) - u)."""
    return -growth_bracket(u, v, params)


def brevity_f2(u, v, params: ModelParams):
    """f2 = -(1 - (1 + u)**p v)."""
    return -tension_bracket(u, v, params)
