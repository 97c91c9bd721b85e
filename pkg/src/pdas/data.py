"""Test-problem generators and CSV ingestion.

Randomness comes from numpy's PCG64 bit generator seeded through
:class:`numpy.random.SeedSequence`, so every generator is a pure function of
its arguments.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .linalg import DimensionMismatch


class ParseError(ValueError):
    pass


class EmptyData(ValueError):
    pass


class UnknownColumn(KeyError):
    pass


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def normalize_columns(A: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a zero column")
    return A / norms


@dataclass(frozen=True)
class Problem:
    """A sparse-recovery instance ``y = Psi x + noise``.

    ``unpenalized`` lists columns (e.g. an intercept) that are always active
    and contribute nothing to the penalty.
    """

    Psi: np.ndarray
    y: np.ndarray
    x_true: np.ndarray | None = None
    sigma: float | None = None
    delta: float | None = None
    feature_names: tuple[str, ...] | None = None
    unpenalized: tuple[int, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        Psi = np.asarray(self.Psi, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if Psi.ndim != 2:
            raise DimensionMismatch("Psi must be 2-D")
        if Psi.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"Psi has {Psi.shape[0]} rows but y has {y.shape[0]} entries")
        if not (np.all(np.isfinite(Psi)) and np.all(np.isfinite(y))):
            raise ValueError("Psi and y must be finite")
        object.__setattr__(self, "Psi", Psi)
        object.__setattr__(self, "y", y)
        if self.x_true is not None:
            x = np.asarray(self.x_true, dtype=float).ravel()
            if x.shape[0] != Psi.shape[1]:
                raise DimensionMismatch("x_true length does not match Psi")
            object.__setattr__(self, "x_true", x)
        object.__setattr__(self, "unpenalized", tuple(int(i) for i in self.unpenalized))

    @property
    def n(self) -> int:
        return self.Psi.shape[0]

    @property
    def p(self) -> int:
        return self.Psi.shape[1]

    def column_norm_error(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.Psi, axis=0) - 1.0)))

    def noise_level(self) -> float | None:
        """Discrepancy level: explicit ``delta``, else ``sigma * sqrt(n)``."""
        if self.delta is not None:
            return float(self.delta)
        if self.sigma is not None:
            return float(self.sigma) * math.sqrt(self.n)
        return None

    def with_realized_delta(self) -> "Problem":
        """Copy whose ``delta`` is the norm of the noise actually drawn."""
        if "noise_norm" not in self.meta:
            raise ValueError("problem does not record its realized noise")
        return replace(self, delta=self.meta["noise_norm"])


@dataclass(frozen=True)
class SignalSpec:
    p: int
    s: int
    dr: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.s <= self.p:
            raise ValueError(f"support size must satisfy 1 <= s <= p, got s={self.s}, p={self.p}")
        if self.dr < 1:
            raise ValueError("dynamic range must be >= 1")


# ----------------------------------------------------------------------
# sensing matrices


def gen_gaussian(n: int, p: int, seed=0) -> np.ndarray:
    """i.i.d. N(0, 1) entries, columns scaled to unit length."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    return normalize_columns(_rng(seed).standard_normal((n, p)))


def gen_correlated(n: int, p: int, nu: float, seed=0) -> np.ndarray:
    """Gaussian columns blended with their neighbours by weight ``nu``.

    Interior columns become ``psi_j + nu * (psi_{j-1} + psi_{j+1})``; the
    first and last are copied unchanged.  Columns are normalized afterwards.
    """
    if not 0.0 < nu < 1.0:
        raise ValueError("nu must lie in (0, 1)")
    base = _rng(seed).standard_normal((n, p))
    out = base.copy()
    if p > 2:
        out[:, 1:-1] += nu * (base[:, :-2] + base[:, 2:])
    return normalize_columns(out)


def gen_heaviside(n: int) -> np.ndarray:
    """Normalized lower-triangular matrix of ones."""
    if n < 1:
        raise ValueError("n must be positive")
    H = np.tril(np.ones((n, n)))
    return H / np.sqrt(np.arange(n, 0, -1, dtype=float))


def gen_matrix(kind: str, n: int, p: int, seed=0, nu: float = 0.2) -> np.ndarray:
    if kind == "gaussian":
        return gen_gaussian(n, p, seed)
    if kind == "correlated":
        return gen_correlated(n, p, nu, seed)
    if kind == "heaviside":
        if p != n:
            raise ValueError("the Heaviside design is square; pass p == n")
        return gen_heaviside(n)
    raise ValueError(f"unknown matrix kind {kind!r}")


# ----------------------------------------------------------------------
# signals and noise


def gen_signal(spec: SignalSpec) -> np.ndarray:
    """Random ``s``-sparse vector whose nonzero magnitudes span exactly ``[1, dr]``.

    Magnitudes are log-uniform on ``[1, dr]``, with one entry pinned to 1 and
    (for ``s >= 2``) another pinned to ``dr``; signs are independent.
    """
    rng = _rng(spec.seed)
    support = np.sort(rng.choice(spec.p, size=spec.s, replace=False))
    mags = np.exp(rng.uniform(0.0, math.log(spec.dr), size=spec.s)) if spec.dr > 1 else np.ones(spec.s)
    order = rng.permutation(spec.s)
    mags[order[0]] = 1.0
    if spec.s >= 2:
        mags[order[1]] = spec.dr
    signs = rng.choice(np.array([-1.0, 1.0]), size=spec.s)
    x = np.zeros(spec.p)
    x[support] = signs * mags
    return x


def add_noise(y_clean, sigma: float, seed=0) -> np.ndarray:
    y_clean = np.asarray(y_clean, dtype=float)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return y_clean.copy()
    return y_clean + sigma * _rng(seed).standard_normal(y_clean.shape)


def make_problem(
    kind: str = "gaussian",
    n: int = 100,
    p: int = 200,
    s: int = 5,
    dr: float = 1.0,
    sigma: float = 0.0,
    seed: int = 0,
    nu: float = 0.2,
    delta: float | None = None,
) -> Problem:
    """Draw matrix, signal and noise from independent child streams of ``seed``."""
    seq = np.random.SeedSequence(seed)
    m_seed, x_seed, e_seed = (int(c.generate_state(1)[0]) for c in seq.spawn(3))
    Psi = gen_matrix(kind, n, p, m_seed, nu=nu)
    x = gen_signal(SignalSpec(p, s, dr, x_seed))
    y = add_noise(Psi @ x, sigma, e_seed)
    meta = dict(kind=kind, n=n, p=p, s=s, dr=dr, sigma=sigma, seed=seed)
    meta["noise_norm"] = float(np.linalg.norm(y - Psi @ x))
    if kind == "correlated":
        meta["nu"] = nu
    return Problem(Psi, y, x_true=x, sigma=sigma, delta=delta, meta=meta)


# ----------------------------------------------------------------------
# files


def read_matrix_csv(path) -> np.ndarray:
    """Headerless numeric CSV, one row per matrix row."""
    try:
        A = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return A


def read_vector_csv(path) -> np.ndarray:
    return read_matrix_csv(path).ravel()


def write_matrix_csv(path, A) -> None:
    np.savetxt(path, np.atleast_2d(A), delimiter=",", fmt="%.17g")


def write_vector_csv(path, v) -> None:
    np.savetxt(path, np.asarray(v, dtype=float).reshape(-1, 1), delimiter=",", fmt="%.17g")


def load_dataset_csv(path, response_column: str, intercept: bool = True) -> Problem:
    """Read a headed numeric CSV as a feature-selection problem.

    Rows with any missing field are dropped.  The response is centered; each
    predictor is centered and scaled to unit Euclidean norm.  An intercept
    column ``1/sqrt(n)`` named ``Intercept`` is prepended and marked
    unpenalized.  Constant predictors cannot be normalized and are rejected.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8") from exc
    if not rows or not rows[0]:
        raise ParseError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    if response_column not in header:
        raise UnknownColumn(response_column)
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        cells = [c.strip() for c in row]
        if any(c == "" or c.lower() in ("na", "nan", "?") for c in cells):
            continue
        try:
            data.append([float(c) for c in cells])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
    if not data:
        raise EmptyData(f"{path}: no complete rows")
    M = np.array(data)
    j = header.index(response_column)
    y = M[:, j] - M[:, j].mean()
    names = [h for i, h in enumerate(header) if i != j]
    X = np.delete(M, j, axis=1)
    X = X - X.mean(axis=0)
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        bad = [names[i] for i in np.flatnonzero(norms == 0)]
        raise ValueError(f"constant predictor(s) cannot be standardized: {bad}")
    X = X / norms
    n = X.shape[0]
    if intercept:
        X = np.hstack([np.full((n, 1), 1.0 / math.sqrt(n)), X])
        names = ["Intercept"] + names
    return Problem(
        X,
        y,
        feature_names=tuple(names),
        unpenalized=(0,) if intercept else (),
        meta=dict(dataset=str(path), response=response_column),
    )
