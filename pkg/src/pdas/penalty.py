"""Sparsity-promoting penalties and their thresholding (proximal) operators.

Every penalty acts coordinate-wise, ``rho(t) = rho(|t|)``, and carries a
threshold pair ``(t_star, T_star)``: ``T_star = inf_{t>0} g(t)`` with
``g(t) = t/2 + rho(t)/t``, attained at ``t_star``.  A scalar ``v`` is mapped to
zero by the thresholding operator exactly when ``|v| <= T_star``.

At the few points where the operator is set-valued (``|v| = T_star`` for
``l0``/``bridge`` and ``|v| = lam*(tau + 1/2)`` for ``capped_l1``) the
smaller-magnitude element is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

FAMILIES = ("lasso", "l0", "bridge", "capped_l1", "scad", "mcp")
NONCONVEX = ("l0", "bridge", "capped_l1", "scad", "mcp")

#: concavity parameters used when none is given
DEFAULT_TAU = {"bridge": 0.5, "scad": 3.7, "mcp": 2.7, "capped_l1": 1.5}

_ALIASES = {"capped-l1": "capped_l1", "cappedl1": "capped_l1", "lq": "bridge"}

_BISECT_MAXITER = 200
_BISECT_TOL = 1e-12


def normalize_family(name: str) -> str:
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in FAMILIES:
        raise ValueError(f"unknown penalty family {name!r}; expected one of {FAMILIES}")
    return key


def needs_tau(family: str) -> bool:
    return normalize_family(family) in DEFAULT_TAU


class ThresholdPair(NamedTuple):
    t_star: float
    T_star: float


@dataclass(frozen=True)
class Penalty:
    """A penalty family together with its parameters.

    Parameters
    ----------
    family : str
        One of ``lasso``, ``l0``, ``bridge``, ``capped_l1``, ``scad``, ``mcp``.
    lam : float
        Regularization weight, strictly positive.
    tau : float, optional
        Concavity parameter. Required by ``bridge`` (0 < tau < 1),
        ``capped_l1`` (tau > 1), ``scad`` (tau > 2) and ``mcp`` (tau > 1);
        ignored for ``lasso`` and ``l0``.
    """

    family: str
    lam: float
    tau: float | None = None

    def __post_init__(self):
        fam = normalize_family(self.family)
        object.__setattr__(self, "family", fam)
        lam = float(self.lam)
        if not (lam > 0 and math.isfinite(lam)):
            raise ValueError(f"lambda must be positive and finite, got {self.lam}")
        object.__setattr__(self, "lam", lam)
        if fam in ("lasso", "l0"):
            object.__setattr__(self, "tau", None)
            return
        if self.tau is None:
            raise ValueError(f"penalty {fam!r} requires tau")
        tau = float(self.tau)
        ok = {
            "bridge": 0.0 < tau < 1.0,
            "capped_l1": tau > 1.0,
            "scad": tau > 2.0,
            "mcp": tau > 1.0,
        }[fam]
        if not ok or not math.isfinite(tau):
            raise ValueError(f"tau={tau} outside the admissible range for {fam!r}")
        object.__setattr__(self, "tau", tau)

    @classmethod
    def make(cls, family: str, lam: float, tau: float | None = None) -> "Penalty":
        """Like the constructor, but fills in the default ``tau`` when omitted."""
        fam = normalize_family(family)
        if tau is None and fam in DEFAULT_TAU:
            tau = DEFAULT_TAU[fam]
        return cls(fam, lam, tau)

    def with_lambda(self, lam: float) -> "Penalty":
        return replace(self, lam=lam)

    # ------------------------------------------------------------------
    def rho(self, t):
        """Penalty value, elementwise on ``t``."""
        a = np.abs(np.asarray(t, dtype=float))
        lam, tau = self.lam, self.tau
        fam = self.family
        if fam == "lasso":
            out = lam * a
        elif fam == "l0":
            out = np.where(a != 0, lam, 0.0)
        elif fam == "bridge":
            out = lam * a**tau
        elif fam == "capped_l1":
            out = np.minimum(lam * a, lam * lam * tau)
        elif fam == "scad":
            mid = (lam * tau * a - 0.5 * (a * a + lam * lam)) / (tau - 1.0)
            out = np.where(
                a <= lam, lam * a, np.where(a <= lam * tau, mid, 0.5 * lam * lam * (tau + 1.0))
            )
        else:  # mcp
            out = np.where(a < lam * tau, lam * (a - a * a / (2.0 * lam * tau)), 0.5 * lam * lam * tau)
        return out[()] if out.ndim == 0 else out

    def g(self, t):
        """``t/2 + rho(t)/t`` for ``t > 0``; the analytic liminf at ``t = 0``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("g is defined for t >= 0 only")
        if self.family in ("l0", "bridge"):
            at_zero = math.inf
        else:
            at_zero = self.lam
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(t > 0, 0.5 * t + self.rho(t) / np.where(t > 0, t, 1.0), at_zero)
        return out[()] if out.ndim == 0 else out

    def threshold_pair(self) -> ThresholdPair:
        lam, tau = self.lam, self.tau
        if self.family == "l0":
            r = math.sqrt(2.0 * lam)
            return ThresholdPair(r, r)
        if self.family == "bridge":
            t_star = (2.0 * lam * (1.0 - tau)) ** (1.0 / (2.0 - tau))
            T_star = (2.0 - tau) * (2.0 * (1.0 - tau)) ** ((tau - 1.0) / (2.0 - tau)) * lam ** (
                1.0 / (2.0 - tau)
            )
            return ThresholdPair(t_star, T_star)
        return ThresholdPair(0.0, lam)

    @property
    def T_star(self) -> float:
        return self.threshold_pair().T_star

    # ------------------------------------------------------------------
    def threshold(self, v):
        """Thresholding operator ``argmin_u (u - v)**2 / 2 + rho(u)``, elementwise."""
        v = np.asarray(v, dtype=float)
        a = np.abs(v)
        s = np.sign(v)
        lam, tau = self.lam, self.tau
        fam = self.family
        if fam == "lasso":
            mag = np.maximum(a - lam, 0.0)
        elif fam == "l0":
            mag = np.where(a > math.sqrt(2.0 * lam), a, 0.0)
        elif fam == "bridge":
            T = self.threshold_pair().T_star
            mag = np.zeros_like(a)
            big = a > T
            if np.any(big):
                mag[big] = _bridge_larger_root(a[big], lam, tau)
        elif fam == "capped_l1":
            mag = np.where(a <= lam, 0.0, np.where(a <= lam * (tau + 0.5), a - lam, a))
        elif fam == "scad":
            mag = np.where(
                a <= lam,
                0.0,
                np.where(
                    a <= 2.0 * lam,
                    a - lam,
                    np.where(a <= lam * tau, ((tau - 1.0) * a - lam * tau) / (tau - 2.0), a),
                ),
            )
        else:  # mcp
            mag = np.where(
                a <= lam, 0.0, np.where(a <= lam * tau, tau * (a - lam) / (tau - 1.0), a)
            )
        out = s * mag
        return out[()] if out.ndim == 0 else out

    def threshold_set(self, v: float, band: float = 0.0) -> tuple[float, ...]:
        """All elements of the thresholding set at scalar ``v``.

        ``band`` widens the set-valued boundary: if ``|v|`` lies within
        ``band`` of it, both branch elements are returned.
        """
        v = float(v)
        a, s = abs(v), (1.0 if v >= 0 else -1.0)
        base = float(self.threshold(v))
        if self.family in ("l0", "bridge"):
            t_star, T_star = self.threshold_pair()
            if abs(a - T_star) <= band:
                other = s * t_star if a <= T_star else 0.0
                return tuple(sorted({base, other}, key=abs))
        elif self.family == "capped_l1":
            edge = self.lam * (self.tau + 0.5)
            if abs(a - edge) <= band:
                lo, hi = s * (a - self.lam), v
                if a == edge:
                    lo, hi = s * (self.lam * self.tau - 0.5 * self.lam), s * (
                        self.lam * self.tau + 0.5 * self.lam
                    )
                return tuple(sorted({lo, hi}, key=abs))
        return (base,)

    def prox(self, v, step: float = 1.0):
        """Proximal map of ``step * rho``: ``argmin_u (u - v)**2 / 2 + step * rho(u)``.

        For ``step == 1`` this is :meth:`threshold`.  ``lasso``, ``l0`` and
        ``bridge`` rescale ``lam``; ``capped_l1`` and ``mcp`` rescale
        ``(lam, tau) -> (step*lam, tau/step)``, which keeps the kink at
        ``lam*tau`` fixed.  SCAD does not rescale and is solved by comparing
        the stationary points of its three quadratic pieces.
        """
        if step <= 0:
            raise ValueError("step must be positive")
        if step == 1.0:
            return self.threshold(v)
        fam = self.family
        if fam in ("lasso", "l0", "bridge"):
            return replace(self, lam=self.lam * step).threshold(v)
        if fam in ("capped_l1", "mcp") and self.tau / step > 1.0:
            return Penalty(fam, self.lam * step, self.tau / step).threshold(v)
        return self._prox_by_pieces(v, step)

    def _prox_by_pieces(self, v, step):
        v = np.asarray(v, dtype=float)
        a = np.abs(v)
        lam, tau = self.lam, self.tau
        if self.family == "scad":
            knots = (lam, lam * tau)
            cands = [
                np.zeros_like(a),
                np.clip(a - step * lam, 0.0, lam),
                np.full_like(a, lam),
                np.full_like(a, lam * tau),
                np.maximum(a, lam * tau),
            ]
            denom = tau - 1.0 - step
            if denom > 0:
                cands.append(np.clip(((tau - 1.0) * a - step * lam * tau) / denom, *knots))
        elif self.family == "mcp":
            cands = [
                np.zeros_like(a),
                np.full_like(a, lam * tau),
                np.maximum(a, lam * tau),
            ]
            denom = 1.0 - step / tau
            if denom > 0:
                cands.append(np.clip((a - step * lam) / denom, 0.0, lam * tau))
        else:  # capped_l1 with step >= tau
            cands = [
                np.zeros_like(a),
                np.clip(a - step * lam, 0.0, lam * tau),
                np.maximum(a, lam * tau),
            ]
        stack = np.stack(cands)
        vals = 0.5 * (stack - a) ** 2 + step * self.rho(stack)
        # ties resolve to the earliest candidate, which is the smallest in magnitude
        idx = np.argmin(vals, axis=0)
        best = np.take_along_axis(stack, np.expand_dims(idx, 0), axis=0)[0]
        out = np.sign(v) * best
        return out[()] if out.ndim == 0 else out


def _bridge_larger_root(a: np.ndarray, lam: float, tau: float) -> np.ndarray:
    """Larger root of ``u + lam*tau*u**(tau-1) = a`` for each ``a > T_star``.

    The left side is convex in ``u > 0`` with its minimum at
    ``t_bar = (lam*tau*(1-tau))**(1/(2-tau))``, so the root is bracketed by
    ``[t_bar, a]`` and bisection cannot fail.
    """
    c = lam * tau
    t_bar = (c * (1.0 - tau)) ** (1.0 / (2.0 - tau))
    lo = np.full_like(a, t_bar)
    hi = a.copy()
    for _ in range(_BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        f = mid + c * mid ** (tau - 1.0) - a
        done = (np.abs(f) <= _BISECT_TOL) | (hi - lo <= 4 * np.finfo(float).eps * hi)
        neg = f < 0
        lo = np.where(neg & ~done, mid, lo)
        hi = np.where(~neg & ~done, mid, hi)
        lo = np.where(done, mid, lo)
        hi = np.where(done, mid, hi)
        if np.all(done):
            break
    return 0.5 * (lo + hi)


# ----------------------------------------------------------------------
# functional interface


def rho(penalty: Penalty, t):
    return penalty.rho(t)


def g_value(penalty: Penalty, t):
    return penalty.g(t)


def threshold_pair(penalty: Penalty) -> ThresholdPair:
    return penalty.threshold_pair()


def apply_threshold(penalty: Penalty, v):
    return penalty.threshold(v)


def lambda_max(family: str, tau: float | None, psi_t_y_inf: float) -> float:
    """Smallest ``lam`` from the closed form at which ``x = 0`` is a fixed point.

    ``psi_t_y_inf`` is ``||Psi^T y||_inf``.  At the returned value
    ``T_star(lam) >= psi_t_y_inf``; the closed form is nudged up by a few ulps
    when rounding would otherwise break that inequality.
    """
    fam = normalize_family(family)
    a = float(psi_t_y_inf)
    if not a > 0:
        raise ValueError("||Psi^T y||_inf must be positive")
    if fam == "l0":
        lam = 0.5 * a * a
    elif fam == "bridge":
        if tau is None:
            tau = DEFAULT_TAU["bridge"]
        lam = (a / (2.0 - tau)) ** (2.0 - tau) * (2.0 * (1.0 - tau)) ** (1.0 - tau)
    else:
        lam = a
    if tau is None and fam in DEFAULT_TAU:
        tau = DEFAULT_TAU[fam]
    pen = Penalty(fam, lam, tau)
    for _ in range(64):
        if pen.T_star >= a:
            break
        lam = math.nextafter(lam, math.inf)
        pen = pen.with_lambda(lam)
    return lam
