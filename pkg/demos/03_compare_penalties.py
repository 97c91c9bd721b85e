"""Recovery of one signal under every penalty, plus the iterative-shrinkage baseline."""

import numpy as np

from pdas import ContinuationOptions, make_problem, solve_path
from pdas.baselines import prox_grad_solver
from pdas.penalty import FAMILIES

pr = make_problem("correlated", n=250, p=500, s=30, dr=1e3, sigma=0.01, seed=11, nu=0.2)
opts = ContinuationOptions(delta=pr.meta["noise_norm"])
truth = set(np.flatnonzero(pr.x_true))

print(f"{'penalty':10s} {'rel. error':>11s} {'support':>8s} {'exact':>6s}")
for fam in FAMILIES:
    # lasso goes through proximal gradient; the others through PDAS
    solver = prox_grad_solver() if fam == "lasso" else None
    path = solve_path(pr, fam, opts=opts, solver=solver)
    r = path.selected or path.final
    err = np.linalg.norm(r.x - pr.x_true) / np.linalg.norm(pr.x_true)
    print(f"{fam:10s} {err:11.2e} {len(r.support):8d} {str(set(r.support) == truth):>6s}")
