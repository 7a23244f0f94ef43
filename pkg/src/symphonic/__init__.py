"""Reduced symphonic maps between ellipsoids.

Equivariance reduces a symphonic join (or Hopf construction) to a profile
``phi(t)`` on ``[0, pi/2]`` with ``phi(0) = 0`` and ``phi(pi/2) = pi/2``.  The
package minimizes the discretized reduced energy, evaluates the strong form
of its Euler-Lagrange equation and cross-checks minimizers with a shooting
integrator of the first-order system.
"""

from .euler_lagrange import (
    FirstOrderState,
    coefficient_A,
    coefficient_B,
    first_order_form,
    residual,
    residual_sup,
    signed_cuberoot,
    strong_form,
)
from .functional import CoefficientSet, Grid, Profile, evaluate_J, grad_J, hardy_ratio, make_grid, x_norm
from .geometry import EigenmapSpec, Mode, ProblemConfig, SingularPointError, eigenvalue, h_of_t, k_of_phi, weight
from .shooting import BracketFailure, ShootingOptions, ShootResult, Trajectory, compare, integrate, shoot
from .solver import InvalidInit, SolveReport, SolverOptions, initial_profile, minimize, project

__version__ = "0.1.0"

__all__ = [
    "BracketFailure",
    "CoefficientSet",
    "EigenmapSpec",
    "FirstOrderState",
    "Grid",
    "InvalidInit",
    "Mode",
    "ProblemConfig",
    "Profile",
    "ShootResult",
    "ShootingOptions",
    "SingularPointError",
    "SolveReport",
    "SolverOptions",
    "Trajectory",
    "coefficient_A",
    "coefficient_B",
    "compare",
    "eigenvalue",
    "evaluate_J",
    "first_order_form",
    "grad_J",
    "h_of_t",
    "hardy_ratio",
    "initial_profile",
    "integrate",
    "k_of_phi",
    "make_grid",
    "minimize",
    "project",
    "residual",
    "residual_sup",
    "shoot",
    "signed_cuberoot",
    "strong_form",
    "weight",
    "x_norm",
]
