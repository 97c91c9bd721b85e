"""Warm-started continuation in lambda with a discrepancy-principle stop."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .data import Problem
from .linalg import SingularSystem, solve_gram
from .optimality import check_local_min
from .penalty import Penalty, lambda_max
from .solver import SolveResult, SolverOptions, pdas_solve

PATH_COLUMNS = ("index", "lambda", "residual", "support_size", "iterations", "converged", "objective")


@dataclass(frozen=True)
class ContinuationOptions:
    grid_size: int = 100
    lambda_min_factor: float = 1e-15
    delta: float | None = None
    solver: SolverOptions = field(default_factory=lambda: SolverOptions(max_iterations=5))

    def __post_init__(self):
        if self.grid_size < 1:
            raise ValueError("grid_size must be >= 1")
        if not 0 < self.lambda_min_factor < 1:
            raise ValueError("lambda_min_factor must lie in (0, 1)")
        if self.delta is not None and self.delta < 0:
            raise ValueError("delta must be nonnegative")


@dataclass
class ContinuationPath:
    lambdas: np.ndarray
    results: list[SolveResult]
    selected_index: int | None
    delta: float
    lambda_max: float

    @property
    def selected(self) -> SolveResult | None:
        return None if self.selected_index is None else self.results[self.selected_index]

    @property
    def final(self) -> SolveResult:
        """The selected result, or the last computed one if none was selected."""
        return self.results[-1] if self.selected_index is None else self.results[self.selected_index]

    def iterations(self) -> np.ndarray:
        return np.array([r.iterations_used for r in self.results])

    def rows(self):
        for s, r in enumerate(self.results):
            yield {
                "index": s,
                "lambda": float(self.lambdas[s]),
                "residual": r.residual_norm,
                "support_size": int(np.count_nonzero(r.x)),
                "iterations": r.iterations_used,
                "converged": int(r.converged),
                "objective": r.objective,
            }

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=PATH_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def lambda_grid(lam_max: float, opts: ContinuationOptions | None = None) -> np.ndarray:
    """``N + 1`` log-equispaced values from ``lam_max`` down to ``factor * lam_max``."""
    opts = opts or ContinuationOptions()
    if not lam_max > 0:
        raise ValueError("lambda_max must be positive")
    N = opts.grid_size
    ratio = opts.lambda_min_factor ** (1.0 / N)
    return lam_max * ratio ** np.arange(N + 1)


def _unpenalized_fit(problem: Problem) -> np.ndarray:
    x = np.zeros(problem.p)
    if problem.unpenalized:
        U = list(problem.unpenalized)
        PU = problem.Psi[:, U]
        x[U] = solve_gram(PU, PU.T @ problem.y)
    return x


def start_lambda(problem: Problem, family: str, tau: float | None) -> float:
    """``lambda_max`` from ``||Psi^T r||_inf`` over penalized columns.

    ``r`` is the residual after fitting the unpenalized columns alone.
    """
    x = _unpenalized_fit(problem)
    corr = np.abs(problem.Psi.T @ (problem.y - problem.Psi @ x))
    if problem.unpenalized:
        corr[list(problem.unpenalized)] = 0.0
    top = float(np.max(corr, initial=0.0))
    if top == 0.0:
        top = np.finfo(float).tiny ** 0.25
    return lambda_max(family, tau, top)


Solver = Callable[[Problem, Penalty, np.ndarray], SolveResult]


def solve_path(
    problem: Problem,
    family: str,
    tau: float | None = None,
    opts: ContinuationOptions | None = None,
    solver: Solver | None = None,
    stop_at_discrepancy: bool = True,
) -> ContinuationPath:
    """Solve along the decreasing lambda grid, warm-starting each solve.

    Stops at the first ``lambda_s`` whose residual norm is ``<= delta``.
    ``delta`` falls back to the problem's noise level (``sigma * sqrt(n)``)
    and then to 0.  With ``stop_at_discrepancy=False`` the whole grid is
    traversed and ``selected_index`` still marks the first hit.

    ``solver`` maps ``(problem, penalty, x0)`` to a result; PDAS with
    ``opts.solver`` is the default.  The selected (or final) result is
    re-checked with the full local-minimizer report.
    """
    opts = opts or ContinuationOptions()
    pen0 = Penalty.make(family, 1.0, tau)
    tau = pen0.tau
    delta = opts.delta
    if delta is None:
        delta = problem.noise_level()
    if delta is None:
        delta = 0.0
    if solver is None:

        def solver(prob, pen, x0):
            return pdas_solve(prob, pen, x0, opts.solver, certify=False)

    lam_max = start_lambda(problem, pen0.family, tau)
    lambdas = lambda_grid(lam_max, opts)
    x = _unpenalized_fit(problem)
    results: list[SolveResult] = []
    selected = None
    for s, lam in enumerate(lambdas):
        pen = pen0.with_lambda(float(lam))
        try:
            res = solver(problem, pen, x)
        except SingularSystem as exc:
            raise SingularSystem(f"lambda index {s}: {exc}", active=exc.active) from exc
        results.append(res)
        x = res.x
        if selected is None and res.residual_norm <= delta:
            selected = s
            if stop_at_discrepancy:
                break
    lambdas = lambdas[: len(results)]
    last = selected if selected is not None else len(results) - 1
    r = results[last]
    report = check_local_min(r.penalty, problem.Psi, r.x, r.d, unpenalized=problem.unpenalized)
    results[last] = replace(r, optimality=report)
    return ContinuationPath(lambdas, results, selected, float(delta), float(lam_max))
