"""Steady periodic capillary-gravity waves with (possibly discontinuous) vorticity.

The flow is described by the height function h(q, p) on the strip
[0, 2 pi) x [p0, 0].  The package computes laminar flows, the dispersion
relation and bifurcation points, and continues the bifurcating branches of
genuine waves numerically.
"""

from .dispersion import (BifurcationPoint, bifurcation_lambda, lambda0, mu_of_lambda, period_divisor_n,
                         solve_pair, solve_v1, solve_v2, transversality_integral, wronskian_at_surface)
from .grid import TensorGrid
from .laminar import LaminarFlow, head, laminar_flow, laminar_height, speed_profile
from .operators import (WaveState, bernoulli_recovery, boundary_residual, helmholtz_inverse,
                        interior_residual, laminar_state, weak_form_check)
from .params import PhysicalParams, VorticityKind, VorticitySpec, gamma_antiderivative, gamma_eval, gamma_max
from .solver import Branch, BranchPoint, SolverConfig, assemble_system, continue_branch, jacobian, newton_correct

__version__ = "0.1.0"

__all__ = [
    "BifurcationPoint",
    "bifurcation_lambda",
    "lambda0",
    "mu_of_lambda",
    "period_divisor_n",
    "solve_pair",
    "solve_v1",
    "solve_v2",
    "transversality_integral",
    "wronskian_at_surface",
    "TensorGrid",
    "LaminarFlow",
    "head",
    "laminar_flow",
    "laminar_height",
    "speed_profile",
    "WaveState",
    "bernoulli_recovery",
    "boundary_residual",
    "helmholtz_inverse",
    "interior_residual",
    "laminar_state",
    "weak_form_check",
    "PhysicalParams",
    "VorticityKind",
    "VorticitySpec",
    "gamma_antiderivative",
    "gamma_eval",
    "gamma_max",
    "Branch",
    "BranchPoint",
    "SolverConfig",
    "assemble_system",
    "continue_branch",
    "jacobian",
    "newton_correct",
]
