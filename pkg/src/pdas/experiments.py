"""Seeded trial harness behind ``pdas experiment``.

Every experiment returns an :class:`ExperimentResult` whose ``rows`` are a
pure function of the parameters and seed.  Wall-clock measurements live in
``timing_rows`` so that the main tables are byte-reproducible.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import prox_grad_solver
from .continuation import ContinuationOptions, solve_path
from .data import Problem, make_problem
from .penalty import DEFAULT_TAU, NONCONVEX, normalize_family
from .solver import SolverOptions

EXPERIMENTS = ("recovery-prob", "perf", "continuation-trace", "sensitivity")
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class ProblemSpec:
    kind: str = "gaussian"
    n: int = 100
    p: int = 200
    s: int = 5
    dr: float = 1.0
    sigma: float = 0.0
    nu: float = 0.2
    delta: float | str | None = "noise"

    def build(self, seed: int) -> Problem:
        """Draw the instance; ``delta="noise"`` uses the realized noise norm."""
        pr = make_problem(self.kind, self.n, self.p, self.s, self.dr, self.sigma, seed, nu=self.nu)
        if self.delta == "noise":
            return pr.with_realized_delta()
        if self.delta is None:
            return pr
        return Problem(pr.Psi, pr.y, pr.x_true, pr.sigma, float(self.delta), meta=pr.meta)


@dataclass(frozen=True)
class PathSpec:
    grid: int = 100
    lambda_min_factor: float = 1e-15
    max_iterations: int = 5
    epsilon: float = 0.0

    def options(self) -> ContinuationOptions:
        return ContinuationOptions(
            grid_size=self.grid,
            lambda_min_factor=self.lambda_min_factor,
            solver=SolverOptions(max_iterations=self.max_iterations, epsilon_ridge=self.epsilon),
        )


@dataclass
class ExperimentResult:
    name: str
    columns: tuple[str, ...]
    rows: list[dict]
    params: dict
    seeds: dict
    timing_columns: tuple[str, ...] = ()
    timing_rows: list[dict] = field(default_factory=list)
    # per-trial records keyed by condition; kept in memory, never written
    trials: dict = field(default_factory=dict)

    def table_csv(self) -> str:
        return _csv(self.columns, self.rows)

    def timing_csv(self) -> str:
        return _csv(self.timing_columns, self.timing_rows)

    def manifest(self) -> dict:
        return {"schema": 1, "experiment": self.name, "params": self.params, "seeds": self.seeds}


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in columns})
    return buf.getvalue()


def trial_seeds(seed: int, trials: int, condition: int = 0) -> list[int]:
    """Independent 32-bit seeds for ``trials`` runs of one condition."""
    seq = np.random.SeedSequence(seed, spawn_key=(condition,))
    return [int(c.generate_state(1)[0]) for c in seq.spawn(trials)]


def recovery_metrics(x_hat, x_true) -> dict:
    """Relative l2 error, l-infinity error and two support-recovery indicators.

    ``exact_support`` compares the nonzero pattern of ``x_hat`` with the true
    one.  ``top_s_support`` only asks that the ``s`` largest entries of
    ``x_hat`` sit on the true support, ignoring small spurious entries.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    err = x_hat - x_true
    true_supp = np.flatnonzero(x_true)
    est_supp = np.flatnonzero(np.abs(x_hat) > ZERO_TOL)
    s = true_supp.size
    top = np.sort(np.argsort(-np.abs(x_hat), kind="stable")[:s])
    return {
        "re": float(np.linalg.norm(err) / np.linalg.norm(x_true)),
        "ae": float(np.max(np.abs(err))),
        "exact_support": bool(np.array_equal(est_supp, true_supp)),
        "top_s_support": bool(np.array_equal(top, true_supp)),
    }


def run_trial(job: dict) -> dict:
    """One continuation solve on one seeded problem (module level so it pickles)."""
    problem = job["problem"].build(job["seed"])
    family = job["family"]
    solver = prox_grad_solver() if job.get("baseline") else None
    t0 = time.perf_counter()
    path = solve_path(problem, family, job.get("tau"), job["path"].options(), solver=solver)
    elapsed = time.perf_counter() - t0
    final = path.final
    out = recovery_metrics(final.x, problem.x_true)
    out.update(
        seed=job["seed"],
        time=elapsed,
        selected=path.selected_index is not None,
        converged=final.converged,
        coordinatewise=bool(final.optimality.is_coordinatewise_min),
        certified=bool(final.optimality.local_min_certified),
        path_length=len(path.results),
        iterations=[int(r.iterations_used) for r in path.results],
        active_sizes=[int(len(r.active)) for r in path.results],
        lambdas=[float(v) for v in path.lambdas],
        residuals=[float(r.residual_norm) for r in path.results],
        converged_steps=[bool(r.converged) for r in path.results],
        support_size=int(np.count_nonzero(np.abs(final.x) > ZERO_TOL)),
        optimality=final.optimality,
        lam=float(final.lam),
    )
    return out


def run_jobs(jobs: list[dict], threads: int = 1) -> list[dict]:
    """Run trials, in parallel worker processes when ``threads > 1``.

    Results come back in job order regardless of scheduling.
    """
    if threads <= 1 or len(jobs) <= 1:
        return [run_trial(j) for j in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(run_trial, jobs))


def _penalty_list(penalties) -> list[tuple[str, float | None]]:
    out = []
    for name in penalties:
        fam = normalize_family(name)
        out.append((fam, DEFAULT_TAU.get(fam)))
    return out


def _mean(vals) -> float:
    return float(np.mean(vals)) if len(vals) else math.nan


def _timing(label: dict, trials: list[dict]) -> dict:
    t = [r["time"] for r in trials]
    return {**label, "time_mean": _mean(t), "time_median": float(np.median(t))}


def recovery_prob(
    problem: ProblemSpec,
    supports,
    trials: int = 20,
    seed: int = 0,
    penalties=("lasso",) + NONCONVEX,
    path: PathSpec = PathSpec(),
    threads: int = 1,
) -> ExperimentResult:
    """Exact-support recovery rate per support size and penalty.

    Lasso is solved by proximal gradient with the same continuation.
    All penalties see the same problems at a given support size.
    """
    pens = _penalty_list(penalties)
    cols = ("support_size", "penalty", "tau", "trials", "exact_rate", "top_s_rate", "re_mean", "selected_rate")
    rows, timing, seeds, raw = [], [], {}, {}
    for c, s in enumerate(supports):
        spec = ProblemSpec(problem.kind, problem.n, problem.p, int(s), problem.dr, problem.sigma, problem.nu, problem.delta)
        sd = trial_seeds(seed, trials, c)
        seeds[str(s)] = sd
        for fam, tau in pens:
            jobs = [dict(problem=spec, seed=q, family=fam, tau=tau, path=path, baseline=fam == "lasso") for q in sd]
            res = run_jobs(jobs, threads)
            raw[(int(s), fam)] = res
            rows.append(
                {
                    "support_size": int(s),
                    "penalty": fam,
                    "tau": "" if tau is None else tau,
                    "trials": trials,
                    "exact_rate": _mean([r["exact_support"] for r in res]),
                    "top_s_rate": _mean([r["top_s_support"] for r in res]),
                    "re_mean": _mean([r["re"] for r in res]),
                    "selected_rate": _mean([r["selected"] for r in res]),
                }
            )
            timing.append(_timing({"support_size": int(s), "penalty": fam}, res))
    return ExperimentResult(
        "recovery-prob",
        cols,
        rows,
        params=dict(problem=_spec_dict(problem), supports=[int(s) for s in supports], trials=trials, seed=seed,
                    penalties=[f for f, _ in pens], path=path.__dict__),
        seeds=seeds,
        timing_columns=("support_size", "penalty", "time_mean", "time_median"),
        timing_rows=timing,
        trials=raw,
    )


def perf(
    problem: ProblemSpec,
    trials: int = 10,
    seed: int = 0,
    penalties=NONCONVEX,
    path: PathSpec = PathSpec(),
    threads: int = 1,
) -> ExperimentResult:
    """Relative/absolute error, support recovery and iteration counts per penalty."""
    pens = _penalty_list(penalties)
    sd = trial_seeds(seed, trials)
    cols = ("penalty", "tau", "trials", "re_mean", "re_median", "re_max", "ae_mean", "exact_rate",
            "selected_rate", "coordinatewise_rate", "certified_rate", "iterations_mean", "path_length_mean")
    rows, timing, raw = [], [], {}
    for fam, tau in pens:
        jobs = [dict(problem=problem, seed=q, family=fam, tau=tau, path=path, baseline=fam == "lasso") for q in sd]
        res = run_jobs(jobs, threads)
        raw[fam] = res
        rows.append(
            {
                "penalty": fam,
                "tau": "" if tau is None else tau,
                "trials": trials,
                "re_mean": _mean([r["re"] for r in res]),
                "re_median": float(np.median([r["re"] for r in res])),
                "re_max": float(np.max([r["re"] for r in res])),
                "ae_mean": _mean([r["ae"] for r in res]),
                "exact_rate": _mean([r["exact_support"] for r in res]),
                "selected_rate": _mean([r["selected"] for r in res]),
                "coordinatewise_rate": _mean([r["coordinatewise"] for r in res]),
                "certified_rate": _mean([r["certified"] for r in res]),
                "iterations_mean": _mean([sum(r["iterations"]) for r in res]),
                "path_length_mean": _mean([r["path_length"] for r in res]),
            }
        )
        timing.append(_timing({"penalty": fam}, res))
    return ExperimentResult(
        "perf",
        cols,
        rows,
        params=dict(problem=_spec_dict(problem), trials=trials, seed=seed, penalties=[f for f, _ in pens],
                    path=path.__dict__),
        seeds={"trials": sd},
        timing_columns=("penalty", "time_mean", "time_median"),
        timing_rows=timing,
        trials=raw,
    )


def continuation_trace(
    problem: ProblemSpec,
    seed: int = 0,
    penalties=NONCONVEX,
    path: PathSpec = PathSpec(),
    threads: int = 1,
    stop_at_discrepancy: bool = True,
) -> ExperimentResult:
    """Per-lambda inner iteration counts and active-set sizes on one problem."""
    pens = _penalty_list(penalties)
    sd = trial_seeds(seed, 1)
    cols = ("penalty", "index", "lambda", "iterations", "active_size", "residual", "converged")
    jobs = [dict(problem=problem, seed=sd[0], family=f, tau=t, path=path, baseline=f == "lasso") for f, t in pens]
    res = run_jobs(jobs, threads)
    rows = []
    for (fam, _), r in zip(pens, res):
        for i, lam in enumerate(r["lambdas"]):
            rows.append(
                {
                    "penalty": fam,
                    "index": i,
                    "lambda": lam,
                    "iterations": r["iterations"][i],
                    "active_size": r["active_sizes"][i],
                    "residual": r["residuals"][i],
                    "converged": int(r["converged_steps"][i]),
                }
            )
    return ExperimentResult(
        "continuation-trace",
        cols,
        rows,
        params=dict(problem=_spec_dict(problem), seed=seed, penalties=[f for f, _ in pens], path=path.__dict__),
        seeds={"trials": sd},
        timing_columns=("penalty", "time_mean", "time_median"),
        timing_rows=[_timing({"penalty": f}, [r]) for (f, _), r in zip(pens, res)],
        trials={f: [r] for (f, _), r in zip(pens, res)},
    )


def sensitivity(
    problem: ProblemSpec,
    family: str,
    taus,
    trials: int = 10,
    seed: int = 0,
    path: PathSpec = PathSpec(),
    threads: int = 1,
) -> ExperimentResult:
    """Error statistics across values of ``tau`` for one penalty family."""
    fam = normalize_family(family)
    sd = trial_seeds(seed, trials)
    cols = ("penalty", "tau", "trials", "re_mean", "re_median", "ae_mean", "exact_rate")
    rows, timing, raw = [], [], {}
    for tau in taus:
        jobs = [dict(problem=problem, seed=q, family=fam, tau=float(tau), path=path) for q in sd]
        res = run_jobs(jobs, threads)
        raw[float(tau)] = res
        rows.append(
            {
                "penalty": fam,
                "tau": float(tau),
                "trials": trials,
                "re_mean": _mean([r["re"] for r in res]),
                "re_median": float(np.median([r["re"] for r in res])),
                "ae_mean": _mean([r["ae"] for r in res]),
                "exact_rate": _mean([r["exact_support"] for r in res]),
            }
        )
        timing.append(_timing({"penalty": fam, "tau": float(tau)}, res))
    return ExperimentResult(
        "sensitivity",
        cols,
        rows,
        params=dict(problem=_spec_dict(problem), family=fam, taus=[float(t) for t in taus], trials=trials,
                    seed=seed, path=path.__dict__),
        seeds={"trials": sd},
        timing_columns=("penalty", "tau", "time_mean", "time_median"),
        timing_rows=timing,
        trials=raw,
    )


def _spec_dict(spec: ProblemSpec) -> dict:
    d = dict(spec.__dict__)
    if spec.kind != "correlated":
        d.pop("nu")
    return d


def write_result(result: ExperimentResult, out_dir) -> dict:
    """Write ``<name>.csv``, ``<name>_timing.csv`` and ``<name>_manifest.json``.

    Returns the mapping of role to written path.
    """
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = result.name.replace("-", "_")
    files = {
        "table": out / f"{stem}.csv",
        "timing": out / f"{stem}_timing.csv",
        "manifest": out / f"{stem}_manifest.json",
    }
    files["table"].write_text(result.table_csv())
    files["timing"].write_text(result.timing_csv())
    man = result.manifest()
    man["files"] = {k: p.name for k, p in files.items() if k != "manifest"}
    files["manifest"].write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
    return {k: str(v) for k, v in files.items()}
