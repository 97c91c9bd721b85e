"""Unified primal-dual active set (PDAS) iteration.

Each iteration

1. takes the active set ``A = {i : |x_i + d_i| > T_star}``,
2. approximates the dual on ``A`` from the previous iterate (``dual_approx``),
3. solves the least-squares system ``Psi_A^T Psi_A x_A = Psi_A^T y - p_A``
   with ``x = 0`` off ``A``,
4. resets the dual to ``d = Psi^T (y - Psi x)``,

and stops at iteration ``k`` once the new ``(x, d)`` gives back the same
active set and satisfies the dual formula on it (a fixed point).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .data import Problem
from .linalg import SingularSystem, solve_gram
from .optimality import OptimalityReport, check_coordinatewise, check_local_min
from .penalty import Penalty

logger = logging.getLogger(__name__)

LINEARIZED_MARGIN = 0.9


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 10
    epsilon_ridge: float = 0.0
    zero_tol: float = 1e-10
    dual_update: str = "linearized"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.dual_update not in ("linearized", "explicit"):
            raise ValueError("dual_update must be 'linearized' or 'explicit'")
        if self.epsilon_ridge < 0:
            raise ValueError("epsilon_ridge must be nonnegative")


@dataclass(frozen=True)
class SolveResult:
    x: np.ndarray
    d: np.ndarray
    active: tuple[int, ...]
    converged: bool
    iterations_used: int
    residual_norm: float
    objective: float
    penalty: Penalty
    optimality: OptimalityReport | None = None
    active_sizes: tuple[int, ...] = ()
    previous_active: tuple[int, ...] | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def lam(self) -> float:
        return self.penalty.lam

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.x))


def objective(problem: Problem, penalty: Penalty, x) -> float:
    """``0.5 * ||Psi x - y||^2 + sum_i rho(x_i)`` over penalized coordinates."""
    x = np.asarray(x, dtype=float)
    r = problem.Psi @ x - problem.y
    pen = penalty.rho(x)
    if problem.unpenalized:
        pen = np.array(pen, copy=True)
        pen[list(problem.unpenalized)] = 0.0
    return float(0.5 * (r @ r) + np.sum(pen))


def active_set(x, d, T_star: float) -> np.ndarray:
    """Sorted indices with ``|x_i + d_i| > T_star`` (strict)."""
    return np.flatnonzero(np.abs(np.asarray(x) + np.asarray(d)) > T_star)


def dual_approx(penalty: Penalty, x_prev, d_prev, active) -> np.ndarray:
    """Dual estimate on ``active`` built from the previous primal/dual pair."""
    active = np.asarray(active, dtype=int)
    x = np.asarray(x_prev, dtype=float)[active]
    s = x + np.asarray(d_prev, dtype=float)[active]
    a, sg = np.abs(s), np.sign(s)
    lam, tau = penalty.lam, penalty.tau
    fam = penalty.family
    if fam == "l0":
        return np.zeros(active.size)
    if fam == "lasso":
        return sg * lam
    if fam == "bridge":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x != 0, lam * tau * np.abs(x) ** tau / np.where(x != 0, x, 1.0), 0.0)
        return out
    if fam == "capped_l1":
        # |s| <= lam cannot occur on a consistent active set; clamp to sgn(s)*lam
        return np.where(a >= lam * (tau + 0.5), 0.0, sg * lam)
    if fam == "scad":
        return np.where(
            a >= lam * tau,
            0.0,
            np.where(a > 2.0 * lam, (sg * lam * tau - x) / (tau - 1.0), sg * lam),
        )
    # mcp: rho'(t) = lam*sgn(t) - t/tau below the kink
    return np.where(a >= lam * tau, 0.0, sg * lam - x / tau)


def _linearization(penalty: Penalty, x_prev, d_prev, active):
    """Split the dual on ``active`` as ``q + D * x`` around the previous iterate.

    Returns ``(D, q)``.  SCAD and MCP are affine in ``x`` on each branch, so
    the split is exact; for bridge it is the tangent at ``x_prev``.  Other
    families have ``D = 0`` and ``q`` equal to :func:`dual_approx`.
    """
    fam = penalty.family
    lam, tau = penalty.lam, penalty.tau
    xa = np.asarray(x_prev, dtype=float)[active]
    s = xa + np.asarray(d_prev, dtype=float)[active]
    a, sg = np.abs(s), np.sign(s)
    D = np.zeros(active.size)
    if fam == "mcp":
        mid = a < lam * tau
        D[mid] = -1.0 / tau
        q = np.where(mid, sg * lam, 0.0)
    elif fam == "scad":
        mid = (a > 2.0 * lam) & (a < lam * tau)
        low = a <= 2.0 * lam
        D[mid] = -1.0 / (tau - 1.0)
        q = np.where(mid, sg * lam * tau / (tau - 1.0), np.where(low, sg * lam, 0.0))
    elif fam == "bridge":
        # entering coordinates are linearized at their scalar prox value
        xa = np.where(xa != 0, xa, penalty.threshold(s))
        nz = xa != 0
        ax = np.abs(xa[nz])
        D[nz] = lam * tau * (tau - 1.0) * ax ** (tau - 2.0)
        q = np.zeros(active.size)
        q[nz] = lam * tau * (2.0 - tau) * ax ** (tau - 1.0) * np.sign(xa[nz])
    else:
        q = dual_approx(penalty, x_prev, d_prev, active)
    return D, q


def _active_update(penalty, PA, y, x, d, A, free_A, opts):
    rhs_y = PA.T @ y
    if opts.dual_update == "linearized" and penalty.family in ("bridge", "scad", "mcp"):
        D, q = _linearization(penalty, x, d, A)
        D[free_A] = 0.0
        q[free_A] = 0.0
        G = PA.T @ PA
        G[np.diag_indices_from(G)] += opts.epsilon_ridge
        # a concave branch can make the system nearly singular, which amplifies
        # noise; require it to keep 10% of the unshifted smallest eigenvalue
        H = G.copy()
        H[np.diag_indices_from(H)] += D
        ok = not np.any(D < 0)
        if not ok:
            lo = np.linalg.eigvalsh(G)[0]
            ok = np.linalg.eigvalsh(H)[0] >= (1.0 - LINEARIZED_MARGIN) * lo
        if ok:
            try:
                L = np.linalg.cholesky(H)
                return scipy.linalg.cho_solve((L, True), rhs_y - q)
            except np.linalg.LinAlgError:
                pass
        logger.debug("linearized system ill-conditioned; using the explicit dual")
    p_A = dual_approx(penalty, x, d, A)
    p_A[free_A] = 0.0
    return solve_gram(PA, rhs_y - p_A, opts.epsilon_ridge)


def _stationary_on(penalty, x, d, A, free_A) -> bool:
    """Whether ``d_A`` matches the dual formula evaluated at ``(x, d)``."""
    if not A.size:
        return True
    target = dual_approx(penalty, x, d, A)
    target[free_A] = 0.0
    # relative to the dual scale; the |x| term only absorbs roundoff in d
    scale = max(1.0, float(np.max(np.abs(target))), float(np.max(np.abs(d[A]))))
    tol = 1e-9 * scale + 1e-12 * float(np.max(np.abs(x)))
    return bool(np.max(np.abs(d[A] - target)) <= tol)


def pdas_solve(
    problem: Problem,
    penalty: Penalty,
    x0=None,
    opts: SolverOptions | None = None,
    certify: bool = True,
) -> SolveResult:
    """Run the PDAS iteration from ``x0`` (zeros by default).

    ``certify`` attaches the full local-minimizer report; otherwise only the
    cheap coordinate-wise check is run.

    Raises
    ------
    SingularSystem
        With ``.active`` set to the offending active set.
    """
    opts = opts or SolverOptions()
    Psi, y = problem.Psi, problem.y
    n, p = Psi.shape
    if problem.column_norm_error() > 1e-6:
        warnings.warn("columns of Psi are not unit-norm; thresholds assume they are", stacklevel=2)
    x = np.zeros(p) if x0 is None else np.array(x0, dtype=float, copy=True)
    if x.shape != (p,) or not np.all(np.isfinite(x)):
        raise ValueError("x0 must be a finite vector of length p")
    free = np.zeros(p, dtype=bool)
    free[list(problem.unpenalized)] = True

    T_star = penalty.T_star
    d = Psi.T @ (y - Psi @ x)
    prev = before_prev = None
    converged = False
    sizes = []
    k = 0
    for k in range(1, opts.max_iterations + 1):
        mask = np.abs(x + d) > T_star
        mask |= free
        A = np.flatnonzero(mask)
        sizes.append(int(A.size))
        x_new = np.zeros(p)
        if A.size:
            PA = Psi[:, A]
            try:
                x_new[A] = _active_update(penalty, PA, y, x, d, A, free[A], opts)
            except SingularSystem as exc:
                raise SingularSystem(str(exc), active=tuple(int(i) for i in A)) from exc
        x = x_new
        d = Psi.T @ (y - Psi @ x)
        # fixed point: the new (x, d) reproduces A and the dual formula on A
        nxt = (np.abs(x + d) > T_star) | free
        if np.array_equal(nxt, mask) and _stationary_on(penalty, x, d, A, free[A]):
            converged = True
            break
        before_prev, prev = prev, A.tobytes()

    r = Psi @ x - y
    active = tuple(int(i) for i in np.flatnonzero(mask))
    if certify:
        report = check_local_min(penalty, Psi, x, d, unpenalized=problem.unpenalized)
    else:
        report = check_coordinatewise(penalty, x, d, unpenalized=problem.unpenalized)
    previous = None
    if not converged and before_prev is not None:
        previous = tuple(int(i) for i in np.frombuffer(before_prev, dtype=A.dtype))
        logger.debug("PDAS stopped at the iteration cap; last two active sets differ")
    return SolveResult(
        x=x,
        d=d,
        active=active,
        converged=converged,
        iterations_used=k,
        residual_norm=float(np.linalg.norm(r)),
        objective=objective(problem, penalty, x),
        penalty=penalty,
        optimality=report,
        active_sizes=tuple(sizes),
        previous_active=previous,
    )
