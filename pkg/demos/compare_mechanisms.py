"""
Four ways to make the estimate private
=======================================

The same observations are completed with no protection and with each of
the four mechanisms: randomized response on the ratings, a random linear
term in the objective, noisy clamped gradients, and Laplace noise on the
output. Every private run reports the budget it spent.
"""

import numpy as np

from onebit_dp import LinkModel, RngHandle, RunConfig, are, gen_synthetic, run_mechanism, sample_observations
from onebit_dp.mechanisms import run_output_perturbation

link = LinkModel.logistic()
truth = gen_synthetic(60, 60, 1, 1.0, RngHandle(1, 1))
obs = sample_observations(truth, 0.3, link, RngHandle(1, 2))

clean = run_mechanism(obs, RunConfig.build("clear", None, obs.shape))
print(f"{'mechanism':>10} {'eps':>5} {'ARE':>8} {'spent':>7}")
print(f"{'clear':>10} {'-':>5} {are(clean.solution, truth.M):8.3f} {0:7.2f}")

for eps in (1.0, 4.0, 10.0):
    for mech in ("inp", "objp", "grap", "outp"):
        cfg = RunConfig.build(mech, eps, obs.shape, seed=7)
        # output perturbation only needs the clean solution plus noise
        res = run_output_perturbation(obs, cfg, clean=clean) if mech == "outp" else run_mechanism(obs, cfg)
        print(f"{mech:>10} {eps:5.1f} {are(res.solution, truth.M):8.3f} {res.epsilon_spent:7.2f}")

# gradient perturbation spends eps / K at each of its K steps
res = run_mechanism(obs, RunConfig.build("grap", 2.0, obs.shape, iterations=10))
print([round(e, 3) for _, e in res.ledger.entries])
print("total:", res.epsilon_spent, "noise scale per step:", res.noise_scale)
