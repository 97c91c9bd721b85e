"""Primal-dual active set solvers for nonconvex sparse recovery."""

from .baselines import prox_grad_solve, prox_grad_solver
from .continuation import ContinuationOptions, ContinuationPath, lambda_grid, solve_path
from .data import Problem, SignalSpec, load_dataset_csv, make_problem
from .linalg import DimensionMismatch, SingularSystem
from .optimality import OptimalityReport, check_coordinatewise, check_local_min
from .penalty import FAMILIES, NONCONVEX, Penalty, apply_threshold, lambda_max, threshold_pair
from .solver import SolveResult, SolverOptions, dual_approx, objective, pdas_solve

__version__ = "0.1.0"

__all__ = [
    "FAMILIES",
    "NONCONVEX",
    "ContinuationOptions",
    "ContinuationPath",
    "DimensionMismatch",
    "OptimalityReport",
    "Penalty",
    "Problem",
    "SignalSpec",
    "SingularSystem",
    "SolveResult",
    "SolverOptions",
    "apply_threshold",
    "check_coordinatewise",
    "check_local_min",
    "dual_approx",
    "lambda_grid",
    "lambda_max",
    "load_dataset_csv",
    "make_problem",
    "objective",
    "pdas_solve",
    "prox_grad_solve",
    "prox_grad_solver",
    "solve_path",
    "threshold_pair",
]
