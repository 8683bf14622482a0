"""
A small reproducible sweep
===========================

The experiment runner writes one CSV row per (mechanism, eps, seed,
metric) cell and a side file with the budget each cell spent. Running the
same configuration twice gives the same values.
"""

import tempfile
from pathlib import Path

from onebit_dp import experiments as ex

cfg = ex.ExperimentConfig(d1=40, d2=40, ratios=(0.3,), epsilons=(1.0, 5.0),
                          seeds=(0, 1, 2), mechanisms=("clear", "objp", "outp"))
rows = ex.run_synthetic(cfg)

out = Path(tempfile.mkdtemp()) / "sweep.csv"
ex.write_rows(rows, out, budget_path=out.with_suffix(".budget.csv"))
print(out.read_text())

# mean and standard deviation over seeds, one series per mechanism
for path in ex.write_plotdata(out):
    print(path.name)
    print(path.read_text())
