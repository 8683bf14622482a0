"""
How the recovery bounds scale
==============================

The bound calculators evaluate the right-hand sides of the recovery
guarantees with all unspecified universal constants set to 1. They are
useful for reading off trends in n and eps, not absolute error levels.
"""

from onebit_dp import LinkModel, theory_bound

link = LinkModel.logistic()
dims, r = (100, 100), 1

print(f"{'n':>7} {'input':>9} {'objective':>10} {'output':>9}")
for n in (1_000, 3_000, 10_000):
    row = [theory_bound(t, dims, r, n, link, 1.0, 2.0) for t in ("T1", "T2", "T4")]
    print(f"{n:7d} " + " ".join(f"{v:9.3f}" for v in row))

# the output-perturbation bound carries a 1/eps^2 term
for eps in (1.0, 2.0, 4.0, 8.0):
    print(eps, round(theory_bound("T4", dims, r, 1500, link, 1.0, eps), 3))
