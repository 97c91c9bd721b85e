"""Feature selection on a small tabular dataset with a planted linear model.

The intercept column is left unpenalized; the remaining predictors are
standardized to unit norm before the penalties compete for them.
"""

import csv
import tempfile
from pathlib import Path

import numpy as np

from pdas import ContinuationOptions, solve_path
from pdas.data import load_dataset_csv

rng = np.random.default_rng(0)
n = 80
X = rng.standard_normal((n, 6))
price = 1.5 * X[:, 1] - 2.0 * X[:, 4] + 0.1 * rng.standard_normal(n)
names = ["length", "weight", "width", "height", "power", "mpg"]

tmp = Path(tempfile.mkdtemp()) / "cars.csv"
with open(tmp, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(names + ["price"])
    w.writerows(np.column_stack([X, price]).tolist())

pr = load_dataset_csv(tmp, "price")
# noise level from the full least-squares fit, with a little headroom
full = np.linalg.lstsq(pr.Psi, pr.y, rcond=None)[0]
delta = 1.05 * np.linalg.norm(pr.Psi @ full - pr.y)
for fam in ("lasso", "l0", "scad", "mcp"):
    r = solve_path(pr, fam, opts=ContinuationOptions(delta=delta)).selected
    print(f"{fam:6s}", [pr.feature_names[i] for i in r.support])
print("\nthe CLI does the same with: pdas features --dataset cars.csv --response price")
