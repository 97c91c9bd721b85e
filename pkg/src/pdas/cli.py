"""Command-line interface: ``pdas {solve,experiment,features,generate}``.

Exit status is 0 on success, 2 when the final solve did not converge (the
report is still written) and 1 on bad flags, unreadable input or numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np
import scipy.stats

from . import experiments as ex
from .continuation import ContinuationOptions, solve_path
from .data import (
    Problem,
    load_dataset_csv,
    make_problem,
    read_matrix_csv,
    read_vector_csv,
    write_matrix_csv,
    write_vector_csv,
)
from .linalg import SingularSystem, solve_gram
from .optimality import OptimalityReport, check_local_min
from .penalty import DEFAULT_TAU, FAMILIES, Penalty, needs_tau, normalize_family
from .solver import SolverOptions, pdas_solve

SCHEMA = 1
PENALTY_CHOICES = ("lasso", "l0", "bridge", "capped-l1", "scad", "mcp")
GENERATORS = ("gaussian", "correlated", "heaviside")

logger = logging.getLogger("pdas")


class UsageError(Exception):
    """Invalid flag combination; reported with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ----------------------------------------------------------------------
# argument parsing


def _delta(text: str):
    if text == "noise":
        return "noise"
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected a nonnegative number or 'noise'") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError("delta must be nonnegative")
    return v


def _int_range(text: str) -> list[int]:
    """``"5:5:50"`` (start:step:stop, inclusive) or ``"10,20,40"``."""
    try:
        if ":" in text:
            a, b, c = (int(t) for t in text.split(":"))
            if b <= 0:
                raise ValueError
            return list(range(a, c + 1, b))
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer range {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _add_generator(p, n=None, pp=None, s=None, dr=None, sigma=None):
    g = p.add_argument_group("problem generator")
    g.add_argument("--gen", choices=GENERATORS, help="sensing-matrix family")
    g.add_argument("--nu", type=float, default=0.2, help="neighbour correlation for --gen correlated")
    g.add_argument("--n", type=int, default=n, help="rows")
    g.add_argument("--p", type=int, default=pp, help="columns")
    g.add_argument("--sparsity", type=int, default=s, help="nonzeros in the true signal")
    g.add_argument("--dr", type=float, default=dr, help="dynamic range of the true signal")
    g.add_argument("--sigma", type=float, default=sigma, help="noise standard deviation")
    g.add_argument("--seed", type=int, default=0)


def _add_path(p, grid=100):
    g = p.add_argument_group("continuation")
    g.add_argument("--grid", type=int, default=grid, help="number of lambda subintervals N")
    g.add_argument("--lambda-min-factor", type=float, default=1e-15)
    g.add_argument("--epsilon", type=float, default=0.0, help="ridge added to the active Gram matrix")
    g.add_argument("--max-iter", type=int, default=None, help="PDAS iterations per solve")
    g.add_argument(
        "--delta",
        type=_delta,
        default=None,
        help="discrepancy level; 'noise' uses the realized noise norm of a generated problem",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdas", description="Primal-dual active set solver for nonconvex sparse recovery.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="solve one problem, with or without continuation")
    sp.add_argument("--penalty", required=True, choices=PENALTY_CHOICES)
    sp.add_argument("--lambda", dest="lam", type=float, help="fixed lambda (requires --no-continuation)")
    sp.add_argument("--tau", type=float)
    _add_generator(sp)
    src = sp.add_argument_group("input files")
    src.add_argument("--matrix", type=Path, help="headerless CSV sensing matrix")
    src.add_argument("--y", type=Path, help="headerless CSV observation vector")
    src.add_argument("--x-true", type=Path, help="optional reference signal for error metrics")
    src.add_argument("--dataset", type=Path, help="headed CSV regression dataset")
    src.add_argument("--response", help="response column of --dataset")
    _add_path(sp)
    sp.add_argument("--no-continuation", action="store_true")
    _add_output(sp)

    ep = sub.add_parser("experiment", help="run a seeded benchmark")
    ep.add_argument("name", choices=ex.EXPERIMENTS)
    _add_generator(ep)
    ep.add_argument("--supports", type=_int_range, help="support sizes for recovery-prob, e.g. 5:5:50")
    ep.add_argument("--penalty", help="comma-separated penalty list")
    ep.add_argument("--tau", type=_float_list, help="tau values for sensitivity")
    ep.add_argument("--trials", type=int)
    ep.add_argument("--threads", type=int, default=1, help="worker processes for independent trials")
    _add_path(ep)
    ep.add_argument("--out", type=Path, default=Path("."), help="output directory")

    fp = sub.add_parser("features", help="feature selection on a CSV dataset")
    fp.add_argument("--dataset", type=Path, required=True)
    fp.add_argument("--response", required=True)
    fp.add_argument("--penalty", default=",".join(PENALTY_CHOICES), help="comma-separated penalty list")
    fp.add_argument("--tau", type=float, help="tau for every listed family (default: per-family)")
    _add_path(fp)
    _add_output(fp, table="the feature-by-penalty selection table")

    gp = sub.add_parser("generate", help="write a generated problem as CSV files")
    _add_generator(gp, n=100, s=5, dr=1.0, sigma=0.0)
    gp.add_argument("--out", type=Path, default=Path("."))
    return parser


def _add_output(p, table="the per-lambda path table"):
    g = p.add_argument_group("output")
    g.add_argument("--out", type=Path, default=Path("."), help="output directory")
    g.add_argument("--json", action="store_true", help="write the JSON report (default)")
    g.add_argument("--csv", action="store_true", help=f"also write {table}")


# ----------------------------------------------------------------------
# helpers


def _require(args, *names):
    missing = [n for n in names if getattr(args, n.lstrip("-").replace("-", "_")) is None]
    if missing:
        raise UsageError(f"missing required flag(s): {', '.join('--' + m for m in missing)}")


def _generated_problem(args) -> Problem:
    _require(args, "n", "sparsity", "sigma")
    p = args.n if args.gen == "heaviside" and args.p is None else args.p
    if p is None:
        raise UsageError("missing required flag(s): --p")
    dr = 1.0 if args.dr is None else args.dr
    return make_problem(args.gen, args.n, p, args.sparsity, dr, args.sigma, args.seed, nu=args.nu)


def _problem_from_args(args) -> tuple[Problem, dict]:
    sources = [args.gen is not None, args.matrix is not None or args.y is not None, args.dataset is not None]
    if sum(sources) != 1:
        raise UsageError("give exactly one problem source: --gen, --matrix/--y, or --dataset/--response")
    if args.gen:
        pr = _generated_problem(args)
        info = {"source": "generator", **pr.meta}
    elif args.dataset:
        _require(args, "response")
        pr = load_dataset_csv(args.dataset, args.response)
        info = {"source": "dataset", "path": str(args.dataset), "response": args.response}
    else:
        _require(args, "matrix", "y")
        A = read_matrix_csv(args.matrix)
        y = read_vector_csv(args.y)
        x_true = read_vector_csv(args.x_true) if args.x_true else None
        pr = Problem(A, y, x_true=x_true, sigma=args.sigma)
        info = {"source": "files", "matrix": str(args.matrix), "y": str(args.y)}
    info.update(n=pr.n, p=pr.p)
    if args.delta == "noise":
        if "noise_norm" not in pr.meta:
            raise UsageError("--delta noise needs a generated problem")
        pr = pr.with_realized_delta()
    elif args.delta is not None:
        pr = Problem(pr.Psi, pr.y, pr.x_true, pr.sigma, args.delta, pr.feature_names, pr.unpenalized, pr.meta)
    elif args.dataset and pr.delta is None:
        pr = _with_estimated_delta(pr)
    return pr, info


def _with_estimated_delta(pr: Problem, level: float = 0.95) -> Problem:
    """Discrepancy level from the full least-squares fit.

    ``delta**2 = RSS_full * (1 + q * F / (n - k))`` with ``q`` penalized
    columns and ``F`` the ``level`` quantile of ``F(q, n - k)``: a submodel
    passes when an F-test would not reject it against the full model.
    """
    n, k = pr.Psi.shape
    q = k - len(pr.unpenalized)
    if n <= k:
        raise UsageError("dataset has no more rows than columns; pass --delta")
    x = solve_gram(pr.Psi, pr.Psi.T @ pr.y)
    rss = float(np.sum((pr.y - pr.Psi @ x) ** 2))
    delta = math.sqrt(rss * (1.0 + q * float(scipy.stats.f.ppf(level, q, n - k)) / (n - k)))
    return Problem(pr.Psi, pr.y, pr.x_true, pr.sigma, delta, pr.feature_names, pr.unpenalized, pr.meta)


def _continuation_options(args, default_iter=5) -> ContinuationOptions:
    return ContinuationOptions(
        grid_size=args.grid,
        lambda_min_factor=args.lambda_min_factor,
        delta=None,
        solver=SolverOptions(max_iterations=args.max_iter or default_iter, epsilon_ridge=args.epsilon),
    )


def _penalty_block(pen: Penalty) -> dict:
    return {"family": pen.family, "lambda": pen.lam, "tau": pen.tau}


def _errors(x, x_true) -> dict:
    if x_true is None:
        return {"relative_l2_error": None, "linf_error": None}
    err = x - x_true
    nrm = float(np.linalg.norm(x_true))
    return {
        "relative_l2_error": float(np.linalg.norm(err) / nrm) if nrm > 0 else None,
        "linf_error": float(np.max(np.abs(err), initial=0.0)),
    }


def _selected(problem: Problem, x) -> list[int]:
    return sorted(set(np.flatnonzero(np.abs(x) > ex.ZERO_TOL).tolist()) | set(problem.unpenalized))


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_timing(path: Path, seconds: float) -> None:
    _write_json(path, {"schema": SCHEMA, "wall_time_seconds": seconds})


# ----------------------------------------------------------------------
# commands


def cmd_solve(args, argv) -> int:
    fam = normalize_family(args.penalty)
    if needs_tau(fam) and args.tau is None:
        raise UsageError(f"--tau is required for --penalty {args.penalty}")
    if args.no_continuation and args.lam is None:
        raise UsageError("--no-continuation requires --lambda")
    if args.lam is not None and not args.no_continuation:
        raise UsageError("--lambda is only used with --no-continuation")
    tau = args.tau if needs_tau(fam) else None
    problem, info = _problem_from_args(args)
    info["delta"] = problem.noise_level()

    t0 = time.perf_counter()
    if args.no_continuation:
        pen = Penalty.make(fam, args.lam, tau)
        opts = SolverOptions(max_iterations=args.max_iter or 10, epsilon_ridge=args.epsilon)
        result = pdas_solve(problem, pen, None, opts)
        path = None
    else:
        path = solve_path(problem, fam, tau, _continuation_options(args))
        result = path.final
    elapsed = time.perf_counter() - t0

    sel = _selected(problem, result.x)
    report = {
        "schema": SCHEMA,
        "command": list(argv),
        "seed": args.seed if args.gen else None,
        "penalty": _penalty_block(result.penalty),
        "problem": info,
        "unpenalized": list(problem.unpenalized),
        "selected_lambda": result.lam,
        "selected_index": None if path is None else path.selected_index,
        "lambda_max": None if path is None else path.lambda_max,
        "residual": result.residual_norm,
        "objective": result.objective,
        "converged": result.converged,
        "iterations": result.iterations_used,
        **_errors(result.x, problem.x_true),
        "support": {
            "indices": sel,
            "names": [problem.feature_names[i] for i in sel] if problem.feature_names else None,
        },
        "optimality": result.optimality.to_dict(),
        "solution": {"x": result.x.tolist(), "d": result.d.tolist()},
        "path": None if path is None else list(path.rows()),
    }
    args.out.mkdir(parents=True, exist_ok=True)
    _write_json(args.out / "report.json", report)
    _write_timing(args.out / "report_timing.json", elapsed)
    if args.csv and path is not None:
        path.to_csv(args.out / "path.csv")
    status = "converged" if result.converged else "NOT converged"
    print(
        f"{fam}: lambda={result.lam:.6g} residual={result.residual_norm:.6g} "
        f"support={len(sel)} {status}; report in {args.out / 'report.json'}"
    )
    return 0 if result.converged else 2


_EXPERIMENT_DEFAULTS = {
    # name: (n, p, s, dr, sigma, trials)
    "recovery-prob": (100, 250, None, 1e3, 0.01, 20),
    "perf": (500, 5000, 50, 1e3, 0.5, 10),
    "continuation-trace": (300, 1000, 50, 1e2, 0.1, 1),
    "sensitivity": (200, 500, 25, 1e3, 0.01, 10),
}


def cmd_experiment(args, argv) -> int:
    n, p, s, dr, sigma, trials = _EXPERIMENT_DEFAULTS[args.name]
    kind = args.gen or "gaussian"
    n = args.n or n
    p = args.p or (n if kind == "heaviside" else p)
    spec = ex.ProblemSpec(
        kind=kind,
        n=n,
        p=p,
        s=args.sparsity or s or 1,
        dr=args.dr if args.dr is not None else dr,
        sigma=args.sigma if args.sigma is not None else sigma,
        nu=args.nu,
        delta="noise" if args.delta is None else args.delta,
    )
    trials = args.trials or trials
    if trials < 1:
        raise UsageError("--trials must be positive")
    path = ex.PathSpec(args.grid, args.lambda_min_factor, args.max_iter or 5, args.epsilon)
    pens = args.penalty.split(",") if args.penalty else None
    for name in pens or ():
        if normalize_family(name) not in FAMILIES:
            raise UsageError(f"unknown penalty {name!r}")
    if args.name == "recovery-prob":
        supports = args.supports or list(range(5, 51, 5))
        res = ex.recovery_prob(spec, supports, trials, args.seed, pens or ("lasso",) + ex.NONCONVEX, path, args.threads)
    elif args.name == "perf":
        res = ex.perf(spec, trials, args.seed, pens or ex.NONCONVEX, path, args.threads)
    elif args.name == "continuation-trace":
        res = ex.continuation_trace(spec, args.seed, pens or ex.NONCONVEX, path, args.threads)
    else:
        fam = normalize_family(pens[0]) if pens else "mcp"
        if not needs_tau(fam):
            raise UsageError(f"sensitivity needs a family with tau, not {fam}")
        taus = args.tau or {"mcp": [1.1, 2.7, 5, 10, 50], "scad": [2.1, 3.7, 5, 10, 50]}.get(fam, [DEFAULT_TAU[fam]])
        res = ex.sensitivity(spec, fam, taus, trials, args.seed, path, args.threads)
    res.params["command"] = list(argv)
    files = ex.write_result(res, args.out)
    print(f"{args.name}: wrote {files['table']}")
    return 0


def cmd_features(args, argv) -> int:
    problem, info = _problem_from_args(
        argparse.Namespace(**{**vars(args), "gen": None, "matrix": None, "y": None, "sigma": None})
    )
    fams = [normalize_family(f) for f in args.penalty.split(",")]
    for f in fams:
        if f not in FAMILIES:
            raise UsageError(f"unknown penalty {f!r}")
    opts = _continuation_options(args)
    names = list(problem.feature_names)
    per, elapsed, worst = {}, {}, 0
    for fam in fams:
        tau = (args.tau if args.tau is not None else DEFAULT_TAU.get(fam)) if needs_tau(fam) else None
        t0 = time.perf_counter()
        path = solve_path(problem, fam, tau, opts)
        elapsed[fam] = time.perf_counter() - t0
        r = path.final
        sel = _selected(problem, r.x)
        worst = max(worst, 0 if r.converged else 2)
        per[fam] = {
            "penalty": _penalty_block(r.penalty),
            "selected_index": path.selected_index,
            "residual": r.residual_norm,
            "converged": r.converged,
            "selected": [names[i] for i in sel],
            "coefficients": {names[i]: float(r.x[i]) for i in sel},
            "optimality": r.optimality.to_dict(),
            "solution": {"x": r.x.tolist(), "d": r.d.tolist()},
        }
    report = {
        "schema": SCHEMA,
        "command": list(argv),
        "problem": {**info, "delta": problem.delta},
        "features": names,
        "unpenalized": list(problem.unpenalized),
        "penalties": per,
        "table": [{"feature": f, **{fam: f in per[fam]["selected"] for fam in fams}} for f in names],
    }
    _write_json(args.out / "features.json", report)
    _write_json(args.out / "features_timing.json", {"schema": SCHEMA, "wall_time_seconds": elapsed})
    if args.csv:
        lines = ["feature," + ",".join(fams)]
        lines += [f + "," + ",".join("1" if f in per[fam]["selected"] else "0" for fam in fams) for f in names]
        (args.out / "features.csv").write_text("\n".join(lines) + "\n")
    width = max(len(f) for f in names)
    print(" " * width + "  " + " ".join(f"{f:>9}" for f in fams))
    for row in report["table"]:
        print(f"{row['feature']:<{width}}  " + " ".join(f"{'x' if row[f] else '.':>9}" for f in fams))
    return worst


def cmd_generate(args, argv) -> int:
    if args.gen is None:
        raise UsageError("missing required flag(s): --gen")
    pr = _generated_problem(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out / "A.csv", pr.Psi)
    write_vector_csv(out / "y.csv", pr.y)
    write_vector_csv(out / "x_true.csv", pr.x_true)
    _write_json(out / "problem.json", {"schema": SCHEMA, "command": list(argv), **pr.meta})
    print(f"wrote A.csv, y.csv, x_true.csv, problem.json to {out}")
    return 0


# ----------------------------------------------------------------------
# reports


def load_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def recheck_optimality(report: dict, Psi, y) -> OptimalityReport:
    """Rebuild a ``solve`` report's optimality block from its stored ``x`` and ``d``.

    ``Psi`` and ``y`` are only used to confirm ``d`` is the dual of ``x``.
    """
    pen = report["penalty"]
    penalty = Penalty.make(pen["family"], pen["lambda"], pen["tau"])
    x = np.array(report["solution"]["x"])
    d = np.array(report["solution"]["d"])
    d_now = np.asarray(Psi).T @ (np.asarray(y) - np.asarray(Psi) @ x)
    if not np.allclose(d, d_now, rtol=0, atol=1e-8 * (1 + np.max(np.abs(y)))):
        raise ValueError("stored dual does not match the stored solution")
    return check_local_min(penalty, Psi, x, d, unpenalized=tuple(report.get("unpenalized", ())))


# ----------------------------------------------------------------------


_COMMANDS = {"solve": cmd_solve, "experiment": cmd_experiment, "features": cmd_features, "generate": cmd_generate}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args, ["pdas"] + argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pdas: error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, SingularSystem) as exc:
        msg = f"unknown column {exc.args[0]!r}" if isinstance(exc, KeyError) else str(exc)
        print(f"pdas: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
