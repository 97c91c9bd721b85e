"""Brute-force reference computations, independent of the closed forms.

Used by the test suite to check the thresholding operators, the optimality
checks and the solver against exhaustive search.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .penalty import Penalty

GRID_STEP = 1e-4
GOLDEN_TOL = 1e-10
TIE_TOL = 1e-6
_BLOCK = 16384

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class TooLarge(ValueError):
    pass


def _golden(f, a: float, b: float, tol: float = GOLDEN_TOL) -> float:
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def scan_minimize(f, half_width: float, center: float = 0.0, step: float = GRID_STEP):
    """Global minimization of a 1-D function on ``center +- half_width``.

    ``f`` must accept arrays.  The grid always contains ``0`` (penalty kinks
    and the ``l0`` jump live there).  Every discrete local minimum is refined
    by golden section, keeping the grid value when refinement does worse.
    Returns ``(minimizers, value)`` where ``minimizers`` holds all refined
    points within ``TIE_TOL`` of the best value.
    """
    lo = math.floor((center - half_width) / step)
    hi = math.ceil((center + half_width) / step)
    u = np.arange(lo, hi + 1) * step
    fu = np.empty_like(u)
    # evaluate in cache-sized blocks; this is several times faster on long grids
    for j in range(0, u.size, _BLOCK):
        fu[j : j + _BLOCK] = f(u[j : j + _BLOCK])
    left = np.r_[np.inf, fu[:-1]]
    right = np.r_[fu[1:], np.inf]
    idx = np.flatnonzero((fu <= left) & (fu <= right))
    # collapse runs of equal values to one representative
    if idx.size > 1:
        keep = np.r_[True, np.diff(idx) > 1]
        idx = idx[keep]
    cands = []
    scalar = lambda t: float(f(np.array([t]))[0])
    for i in idx:
        a = u[max(i - 1, 0)]
        b = u[min(i + 1, u.size - 1)]
        t = _golden(scalar, a, b)
        ft = scalar(t)
        if ft <= fu[i]:
            cands.append((t, ft))
        else:
            cands.append((float(u[i]), float(fu[i])))
    best = min(c[1] for c in cands)
    mins = []
    for t, ft in sorted(cands):
        if ft <= best + TIE_TOL and not any(abs(t - m) <= TIE_TOL for m in mins):
            mins.append(t)
    return tuple(sorted(mins, key=lambda t: (abs(t), t))), best


def brute_threshold(penalty: Penalty, v: float):
    """Minimizers and minimum of ``(u - v)**2 / 2 + rho(u)`` by grid search."""
    v = float(v)
    half = 2.0 * (abs(v) + penalty.T_star)
    f = lambda u: 0.5 * (u - v) ** 2 + penalty.rho(u)
    return scan_minimize(f, half)


def brute_l0_global(Psi, y, lam: float, max_support: int | None = None):
    """Exhaustive minimization of ``0.5||Psi x - y||^2 + lam * ||x||_0``."""
    Psi = np.asarray(Psi, dtype=float)
    y = np.asarray(y, dtype=float)
    p = Psi.shape[1]
    if max_support is None:
        max_support = p
    if p > 14 or not 0 <= max_support <= p:
        raise TooLarge(f"exhaustive search limited to p <= 14 (got p={p}, max_support={max_support})")
    best_x = np.zeros(p)
    best_J = 0.5 * float(y @ y)
    for k in range(1, max_support + 1):
        for S in itertools.combinations(range(p), k):
            cols = list(S)
            coef = np.linalg.lstsq(Psi[:, cols], y, rcond=None)[0]
            r = y - Psi[:, cols] @ coef
            J = 0.5 * float(r @ r) + lam * k
            if J < best_J:
                best_J = J
                best_x = np.zeros(p)
                best_x[cols] = coef
    return best_x, best_J


def brute_coordinate_scan(problem, penalty: Penalty, x, i: int) -> float:
    """Minimizer of ``t -> J(x with x_i = t)`` found by grid search."""
    x = np.asarray(x, dtype=float)
    psi = problem.Psi[:, i]
    r = problem.y - problem.Psi @ x + psi * x[i]
    nrm2 = float(psi @ psi)
    c = float(psi @ r)
    free = i in problem.unpenalized
    f = lambda t: 0.5 * nrm2 * t * t - c * t + (0.0 if free else penalty.rho(t))
    half = 2.0 * (abs(c) / nrm2 + penalty.T_star) + GRID_STEP
    mins, _ = scan_minimize(f, half)
    return mins[0]
