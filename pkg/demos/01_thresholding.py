"""Scalar thresholding operators of the six penalties.

Prints the threshold pair (t*, T*) for each family and the operator applied
to a few inputs, then compares one case with a brute-force grid search.
"""

import numpy as np

from pdas import Penalty
from pdas.oracle import brute_threshold

lam = 1.0
v = np.array([-3.0, -1.2, 0.5, 1.0, 1.5, 2.5, 4.0])

print(f"lambda = {lam}; inputs v = {v.tolist()}\n")
for fam in ("lasso", "l0", "bridge", "capped_l1", "scad", "mcp"):
    P = Penalty.make(fam, lam)
    t_star, T_star = P.threshold_pair()
    tau = "" if P.tau is None else f" (tau={P.tau})"
    print(f"{fam:10s}{tau:12s} t*={t_star:.4f}  T*={T_star:.4f}")
    print("   S(v) =", np.round(P.threshold(v), 4).tolist())

# every value is the global minimizer of (u - v)^2 / 2 + rho(u)
P = Penalty.make("bridge", lam)
mins, best = brute_threshold(P, 2.0)
print(f"\nbridge at v=2: closed form {float(P.threshold(2.0)):.7f}, grid search {mins[0]:.7f}")
