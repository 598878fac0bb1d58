"""Steady states, bifurcation and continuation for a Dirichlet prey-taxis predator-prey system.

    u_t = (d(v) u_x - u chi(v) v_x)_x + lam u - u^2 + gamma u F(v)
    v_t = D v_xx + mu v - v^2 - u F(v)

on ``(0, L)`` with ``u = v = 0`` at both ends.
"""

from .bifurcation import (BifurcationBundle, StabilityVerdict, classify_semitrivial, lambda_mu_bundle,
                          lambda_prime0, lambda_star, nonexistence_lower_bound)
from .config import RunConfig, parse_config, serialize_config
from .continuation import (Branch, BranchPoint, Controls, bifurcation_point_scan, branch_from_prey_bifurcation,
                           classify_endpoint)
from .errors import (ConfigError, ConvergenceError, InvalidArgument, InvariantBreach, NotApplicable,
                     PositivityError, PreytaxisError, SignChangingRoot, StateMissing, UnstableStep)
from .grid import Grid, TridiagonalOperator, assemble_div_form, build_grid, integrate, quadrature_g
from .model import (ModelParams, Motility, ResponseFunction, figure_params, make_motility, make_response,
                    validate_hypotheses)
from .scalar import EigenPair, LogisticSolution, principal_eigen, semitrivial_states, solve_logistic
from .steady import (SteadyState, a_priori_bounds, jacobian, jacobian_w, newton_solve, residual, residual_w,
                     transform_w, untransform_w)
from .timestepper import SimulationConfig, Trajectory, figure_initial, simulate, steady_limit

__all__ = [
    "a_priori_bounds", "assemble_div_form", "bifurcation_point_scan", "BifurcationBundle", "Branch",
    "branch_from_prey_bifurcation", "BranchPoint", "build_grid", "classify_endpoint", "classify_semitrivial",
    "ConfigError", "Controls", "ConvergenceError", "EigenPair", "figure_initial", "figure_params", "Grid",
    "integrate", "InvalidArgument", "InvariantBreach", "jacobian", "jacobian_w", "lambda_mu_bundle",
    "lambda_prime0", "lambda_star", "LogisticSolution", "make_motility", "make_response", "ModelParams",
    "Motility", "newton_solve", "nonexistence_lower_bound", "NotApplicable", "parse_config",
    "PositivityError", "PreytaxisError", "principal_eigen", "quadrature_g", "residual", "residual_w",
    "ResponseFunction", "RunConfig", "semitrivial_states", "serialize_config", "SignChangingRoot", "simulate",
    "SimulationConfig", "solve_logistic", "StabilityVerdict", "StateMissing", "steady_limit", "SteadyState",
    "Trajectory", "transform_w", "TridiagonalOperator", "UnstableStep", "untransform_w",
    "validate_hypotheses",
]

__version__ = "0.1.0"
