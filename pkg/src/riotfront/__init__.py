"""Traveling fronts in a two-species unrest/tension reaction-diffusion model."""

from riotfront.model import (
    DomainError,
    KineticsValue,
    ModelParams,
    decay_h,
    kinetics,
    reduced_rhs,
    sigmoid_r,
)
from riotfront.equilibria import (
    Equilibrium,
    NoPositiveEquilibrium,
    equilibrium_A,
    equilibrium_B,
    nullcline_u_of_v,
    solve_ubar,
    vbar,
)

__all__ = [
    "DomainError",
    "Equilibrium",
    "KineticsValue",
    "ModelParams",
    "NoPositiveEquilibrium",
    "decay_h",
    "equilibrium_A",
    "equilibrium_B",
    "kinetics",
    "nullcline_u_of_v",
    "reduced_rhs",
    "sigmoid_r",
    "solve_ubar",
    "vbar",
]

__version__ = "0.1.0"
