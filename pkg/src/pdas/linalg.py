"""Small dense linear algebra kernels used by the active-set solver."""

from __future__ import annotations

import numpy as np
import scipy.linalg


class DimensionMismatch(ValueError):
    pass


class SingularSystem(np.linalg.LinAlgError):
    """Raised when a Gram system stays singular after the ridge retry."""

    def __init__(self, msg, active=None):
        super().__init__(msg)
        self.active = active


def as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"expected a non-empty 2-D array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def matvec(A, v) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    if A.shape[1] != v.shape[0]:
        raise DimensionMismatch(f"cannot multiply {A.shape} by vector of length {v.shape[0]}")
    return A @ v


def matvec_transpose(A, v) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    v = np.asarray(v, dtype=float)
    if A.shape[0] != v.shape[0]:
        raise DimensionMismatch(f"cannot multiply {A.shape}^T by vector of length {v.shape[0]}")
    return A.T @ v


def _cholesky(G: np.ndarray, pivot_floor: float):
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return None
    if np.min(np.diag(L)) ** 2 <= pivot_floor:
        return None
    return L


def solve_gram(A, rhs, epsilon: float = 0.0) -> np.ndarray:
    """Solve ``(A^T A + epsilon I) z = rhs`` by Cholesky.

    With ``epsilon == 0`` a failed or near-singular factorization (a pivot
    below ``1e-12 * trace / k``) is retried once with the ridge
    ``1e-10 * trace / k``.

    Raises
    ------
    SingularSystem
        If the factorization fails after the retry.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    rhs = np.asarray(rhs, dtype=float)
    k = A.shape[1]
    if rhs.shape != (k,):
        raise DimensionMismatch(f"rhs has shape {rhs.shape}, expected ({k},)")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    G = A.T @ A
    trace = float(np.trace(G))
    if not trace > 0 and epsilon == 0.0:
        raise SingularSystem("Gram matrix is zero")
    scale = trace / k if trace > 0 else 1.0
    L = _cholesky(G + epsilon * np.eye(k), 1e-12 * scale)
    if L is None and epsilon == 0.0:
        L = _cholesky(G + 1e-10 * scale * np.eye(k), 1e-12 * 1e-10 * scale)
    if L is None:
        raise SingularSystem(f"Gram system of size {k} is numerically singular")
    return scipy.linalg.cho_solve((L, True), rhs)


def jacobi_eigenvalues(S, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by the cyclic Jacobi method.

    Sweeps until the off-diagonal Frobenius norm drops below
    ``tol * ||S||_F``.  Returned in ascending order.
    """
    S = np.array(S, dtype=float, copy=True)
    k = S.shape[0]
    if S.shape != (k, k):
        raise DimensionMismatch("matrix must be square")
    if k == 1:
        return S.diagonal().copy()
    target = tol * np.linalg.norm(S)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(S * S) - np.sum(np.diag(S) ** 2), 0.0))
        if off <= target:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = S[p, q]
                if apq == 0.0:
                    continue
                diff = S[q, q] - S[p, p]
                if abs(diff) > 1e150 * abs(apq):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # S <- J^T S J with J the (p, q) rotation
                rp, rq = S[p, :].copy(), S[q, :].copy()
                S[p, :] = c * rp - s * rq
                S[q, :] = s * rp + c * rq
                cp, cq = S[:, p].copy(), S[:, q].copy()
                S[:, p] = c * cp - s * cq
                S[:, q] = s * cp + c * cq
                S[p, q] = S[q, p] = 0.0
    return np.sort(np.diag(S))


def min_singular_value_sq(A) -> float:
    """Smallest eigenvalue of ``A^T A``, clamped at zero.

    This is the constant ``sigma`` in ``||A x||^2 >= sigma ||x||^2``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    n, k = A.shape
    if k > n:
        return 0.0
    return max(float(jacobi_eigenvalues(A.T @ A)[0]), 0.0)


def spectral_norm_sq(A, rtol: float = 1e-8, max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest eigenvalue of ``A^T A`` by power iteration."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    v = np.random.default_rng(seed).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        new = float(np.linalg.norm(w))
        if new == 0.0:
            return 0.0
        v = w / new
        if abs(new - est) <= rtol * new:
            return new
        est = new
    return est
