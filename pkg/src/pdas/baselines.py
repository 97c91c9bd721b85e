"""Proximal-gradient (iterative shrinkage) reference solver.

``x <- prox_{step * rho}(x + step * Psi^T (y - Psi x))`` with the same
thresholding operators the PDAS solver uses.  For the convex lasso this is
forward-backward splitting; for the nonconvex families a step is accepted
only if the objective does not increase, otherwise the step is halved.
"""

from __future__ import annotations

import functools
import logging

import numpy as np

from .data import Problem
from .linalg import spectral_norm_sq
from .optimality import check_coordinatewise
from .penalty import Penalty
from .solver import SolveResult, objective

logger = logging.getLogger(__name__)

DESCENT_SLACK = 1e-12
MAX_HALVINGS = 60


def _prox(penalty: Penalty, v, step: float, free):
    out = np.asarray(penalty.prox(v, step), dtype=float)
    out[free] = v[free]
    return out


def prox_grad_solve(
    problem: Problem,
    penalty: Penalty,
    x0=None,
    step="auto",
    max_iter: int = 10_000,
    rtol: float = 1e-8,
) -> SolveResult:
    """Iterate proximal-gradient steps until ``||dx|| <= rtol * (1 + ||x||)``.

    Parameters
    ----------
    step : float or "auto"
        ``"auto"`` uses ``0.99 / L`` with ``L`` the squared spectral norm of
        ``Psi``.  Larger steps are accepted but may not converge for lasso.
    """
    Psi, y = problem.Psi, problem.y
    p = problem.p
    if step == "auto":
        step = 0.99 / spectral_norm_sq(Psi)
    step = float(step)
    if not step > 0:
        raise ValueError("step must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    free = np.zeros(p, dtype=bool)
    free[list(problem.unpenalized)] = True
    monotone = penalty.family != "lasso"

    x = np.zeros(p) if x0 is None else np.array(x0, dtype=float, copy=True)
    J = objective(problem, penalty, x)
    converged = False
    k = 0
    for k in range(1, max_iter + 1):
        grad = Psi.T @ (y - Psi @ x)
        t = step
        x_new = _prox(penalty, x + t * grad, t, free)
        if monotone:
            J_new = objective(problem, penalty, x_new)
            halvings = 0
            while J_new > J + DESCENT_SLACK and halvings < MAX_HALVINGS:
                t *= 0.5
                halvings += 1
                x_new = _prox(penalty, x + t * grad, t, free)
                J_new = objective(problem, penalty, x_new)
            if J_new > J + DESCENT_SLACK:
                logger.debug("no descent step found at iteration %d", k)
                break
            J = J_new
        dx = float(np.linalg.norm(x_new - x))
        scale = 1.0 + float(np.linalg.norm(x))
        x = x_new
        if dx <= rtol * scale:
            converged = True
            break

    d = Psi.T @ (y - Psi @ x)
    return SolveResult(
        x=x,
        d=d,
        active=tuple(int(i) for i in np.flatnonzero((x != 0) | free)),
        converged=converged,
        iterations_used=k,
        residual_norm=float(np.linalg.norm(Psi @ x - y)),
        objective=objective(problem, penalty, x),
        penalty=penalty,
        optimality=check_coordinatewise(penalty, x, d, unpenalized=problem.unpenalized),
        extra={"step": step},
    )


def prox_grad_solver(**kwargs):
    """``prox_grad_solve`` with fixed options, in the ``(problem, penalty, x0)`` form."""
    return functools.partial(_call, kwargs=kwargs)


def _call(problem, penalty, x0, kwargs):
    return prox_grad_solve(problem, penalty, x0, **kwargs)
