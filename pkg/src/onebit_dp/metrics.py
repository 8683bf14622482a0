"""Recovery metrics and theoretical error-bound calculators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .likelihood import ObservationSet
from .links import LinkModel, PerturbedLink, model_constants, perturbed_constants
from .privacy import objective_sensitivity

__all__ = [
    "MetricReport",
    "are",
    "sign_accuracy",
    "avg_hellinger",
    "theory_bound",
    "BoundConstants",
]


@dataclass
class MetricReport:
    are: float | None = None
    acc: float | None = None
    hellinger: float | None = None
    bound_values: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.are is None and self.acc is None and self.hellinger is None and not self.bound_values:
            raise ValueError("a metric report needs at least one value")


def are(M_hat, M_true) -> float:
    """Relative squared error ``||M_hat - M||_F**2 / ||M||_F**2``."""
    M_hat = np.asarray(M_hat, dtype=float)
    M_true = np.asarray(M_true, dtype=float)
    if M_hat.shape != M_true.shape:
        raise ValueError(f"shape mismatch {M_hat.shape} vs {M_true.shape}")
    denom = float(np.sum(M_true * M_true))
    if denom == 0:
        raise ValueError("relative error is undefined for an all-zero ground truth")
    return float(np.sum((M_hat - M_true) ** 2)) / denom


def sign_accuracy(M_hat, test: ObservationSet) -> float:
    """Fraction of held-out ratings whose sign ``M_hat`` predicts (sgn(0) = +1)."""
    if test.n == 0:
        raise ValueError("accuracy needs a non-empty test set")
    pred = np.where(test.gather(M_hat) >= 0, 1, -1)
    return float(np.mean(pred == test.values))


def avg_hellinger(P, Q) -> float:
    """Entrywise-averaged squared Hellinger distance between Bernoulli matrices."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch {P.shape} vs {Q.shape}")
    for A in (P, Q):
        if np.any((A < 0) | (A > 1)) or not np.all(np.isfinite(A)):
            raise ValueError("Hellinger distance needs probabilities in [0, 1]")
    d = (np.sqrt(P) - np.sqrt(Q)) ** 2 + (np.sqrt(1 - P) - np.sqrt(1 - Q)) ** 2
    return float(np.mean(d))


@dataclass(frozen=True)
class BoundConstants:
    """Unspecified universal constants of the error bounds (all default to 1)."""

    c2: float = 1.0
    c4: float = 1.0
    c6: float = 1.0


def _sampling_term(d1, d2, r, n):
    c_omega = math.sqrt(n + d1 * d2 * math.log(d1 + d2))
    return math.sqrt(r * (d1 + d2) / n) * math.sqrt(c_omega / n)


def theory_bound(theorem: str, dims, r: int, n: int, model: LinkModel, alpha: float,
                 epsilon: float, p: float | None = None,
                 constants: BoundConstants = BoundConstants()) -> float:
    """Right-hand side of the recovery bound for a mechanism.

    ``theorem`` is ``"T1"`` (input perturbation, uses the perturbed-link
    constants with flip probability ``p``, derived from ``epsilon`` when
    omitted), ``"T2"`` (objective perturbation) or ``"T4"`` (output
    perturbation). Values bound ``||M_hat - M*||_F**2 / (d1 d2)`` up to the
    universal constants and are meant for plotting trends only.
    """
    d1, d2 = dims
    if min(d1, d2, r, n) <= 0 or not alpha > 0 or not epsilon > 0:
        raise ValueError("all bound parameters must be positive")
    base = _sampling_term(d1, d2, r, n)
    if theorem == "T1":
        if p is None:
            p = 1.0 / (1.0 + math.exp(epsilon)) if epsilon < 700 else 0.0
        k = perturbed_constants(PerturbedLink.symmetric(model, p), alpha)
        return constants.c2 * alpha * k.steepness * k.flatness * base
    k = model_constants(model, alpha)
    if theorem == "T2":
        delta = objective_sensitivity(model, alpha)
        c_prime = 8.0 * math.sqrt(2.0) * delta * k.flatness
        return (constants.c4 * alpha * k.steepness * k.flatness * base
                + c_prime / (epsilon * n ** (1.0 / 3.0)))
    if theorem == "T4":
        return (constants.c6 * alpha * k.steepness * k.flatness * base
                + constants.c6 * alpha ** 2 * math.log(d1 + d2) ** 2 / epsilon ** 2)
    raise ValueError(f"unknown theorem {theorem!r}; expected T1, T2 or T4")
