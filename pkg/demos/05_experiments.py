"""Small versions of the benchmark experiments, written to ./demo_results."""

from pdas.experiments import PathSpec, ProblemSpec, continuation_trace, recovery_prob, sensitivity, write_result

path = PathSpec(grid=100)

rp = recovery_prob(ProblemSpec(n=100, p=250, dr=1e3, sigma=0.01), supports=(5, 15, 25), trials=5, path=path)
for row in rp.rows:
    print(f"s={row['support_size']:3d} {row['penalty']:10s} exact rate {row['exact_rate']:.2f}")

tr = continuation_trace(ProblemSpec(n=300, p=1000, s=50, dr=1e2, sigma=0.1), penalties=("l0", "mcp"), path=path)
for fam in ("l0", "mcp"):
    its = [r["iterations"] for r in tr.rows if r["penalty"] == fam]
    print(f"{fam}: {len(its)} lambda steps, inner iterations {its}")

sv = sensitivity(ProblemSpec(n=200, p=500, s=25, dr=1e3, sigma=0.01), "scad", (2.1, 3.7, 10.0), trials=3)
for row in sv.rows:
    print(f"scad tau={row['tau']:5.1f}: mean relative error {row['re_mean']:.2e}")

for res in (rp, tr, sv):
    files = write_result(res, "demo_results")
    print("wrote", ", ".join(str(f) for f in files.values()))
