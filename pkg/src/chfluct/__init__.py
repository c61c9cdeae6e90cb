"""Spectral simulation and fluctuation diagnostics for the stochastic Cahn-Hilliard equation.

Neumann problem on [0, pi]^d, d <= 3, with small multiplicative space-time
white noise. The package provides the cosine-basis transforms, the
bi-Laplacian semigroup, exponential-Euler integrators for the deterministic
limit, the CLT limit and the controlled moderate-deviation process, the
moderate-deviation rate function, and Monte Carlo studies around them.
"""
__version__ = "0.1.0"

from chfluct.deterministic import Control, solve_skeleton, solve_u0
from chfluct.green import EigenTable, j_operator, kernel_l2_profile, semigroup_apply, spacetime_l2
from chfluct.model import InitialSpec, ModelError, ModelSpec, ScalingSpec, SigmaSpec
from chfluct.rate import ldp_bound_probe, rate_eval, residual_control
from chfluct.spectral import (
    Field,
    GridSpec,
    NormSpec,
    SpectralField,
    Trajectory,
    holder_norm,
    lp_norm,
    to_physical,
    to_spectral,
)
from chfluct.stochastic import (
    coupled_fluctuation,
    generate_noise,
    solve_controlled,
    solve_u_eps,
    solve_Y,
    step_spde,
)

__all__ = [
    "__version__",
    "Control",
    "EigenTable",
    "Field",
    "GridSpec",
    "InitialSpec",
    "ModelError",
    "ModelSpec",
    "NormSpec",
    "ScalingSpec",
    "SigmaSpec",
    "SpectralField",
    "Trajectory",
    "coupled_fluctuation",
    "generate_noise",
    "holder_norm",
    "j_operator",
    "kernel_l2_profile",
    "ldp_bound_probe",
    "lp_norm",
    "rate_eval",
    "residual_control",
    "semigroup_apply",
    "solve_Y",
    "solve_controlled",
    "solve_skeleton",
    "solve_u0",
    "solve_u_eps",
    "spacetime_l2",
    "step_spde",
    "to_physical",
    "to_spectral",
]
