"""
Randomized response on binary ratings
======================================

Each rating is flipped with probability p = 1 / (1 + e^eps). The ratio of
output probabilities under the two possible inputs is then exactly e^eps,
which is what the privacy guarantee requires.
"""

import math

import numpy as np

from onebit_dp.likelihood import ObservationSet
from onebit_dp.privacy import RngHandle, p_from_epsilon, rr_perturb, rr_privacy_feasible

n = 200_000
idx = np.arange(n)
ones = ObservationSet((n // 1000, 1000), idx // 1000, idx % 1000, np.ones(n))

for eps in (0.5, 1.0, 3.0):
    p = p_from_epsilon(eps)
    kept_plus = np.mean(rr_perturb(ones, p, p, RngHandle(2)).values > 0)
    kept_minus = np.mean(rr_perturb(ones.with_values(-ones.values), p, p, RngHandle(3)).values > 0)
    print(f"eps={eps:3.1f}  p={p:.4f}  empirical ratio {kept_plus / kept_minus:7.3f}  e^eps {math.exp(eps):7.3f}")

# asymmetric flips are allowed as long as every likelihood ratio stays bounded
for p1, p2 in ((0.3, 0.3), (0.2, 0.3), (0.0, 0.5)):
    print(f"p1={p1}, p2={p2}: eps=1 satisfied? {rr_privacy_feasible(p1, p2, 1.0)}")
