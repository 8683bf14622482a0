"""Differential-privacy building blocks.

Randomized response on binary ratings, Laplace samplers, sensitivity
constants for the perturbation mechanisms, and sequential-composition
accounting.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special

from .likelihood import ObservationSet
from .links import LinkKind, LinkModel, link_derivative, link_value

__all__ = [
    "Mechanism",
    "PrivacySpec",
    "RngHandle",
    "PrivacyLedger",
    "rr_perturb",
    "p_from_epsilon",
    "epsilon_from_p",
    "rr_privacy_feasible",
    "sample_laplace",
    "sample_laplace_gamma_sign",
    "objective_sensitivity",
    "gradient_l1_sensitivity",
    "compose_sequential",
]


class Mechanism(str, Enum):
    CLEAR = "clear"
    INPUT = "inp"
    OBJECTIVE = "objp"
    GRADIENT = "grap"
    OUTPUT = "outp"


class RngHandle:
    """Seeded random stream.

    ``(seed, stream)`` pairs map to independent numpy generators through
    :class:`numpy.random.SeedSequence`, so the same pair always reproduces
    the same draws. A handle is stateful; do not share one across threads.
    """

    def __init__(self, seed: int = 0, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self):
        return f"RngHandle(seed={self.seed}, stream={self.stream})"

    def child(self, stream: int) -> "RngHandle":
        """Fresh handle on another stream of the same seed."""
        return RngHandle(self.seed, stream)


def _gen(rng) -> np.random.Generator:
    if isinstance(rng, RngHandle):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class PrivacySpec:
    """Which mechanism runs and with what budget.

    ``p1``/``p2`` apply to input perturbation (derived from ``epsilon`` when
    left unset); ``iterations`` and ``clamp`` apply to gradient perturbation.
    """

    mechanism: Mechanism = Mechanism.CLEAR
    epsilon: float = math.inf
    p1: float | None = None
    p2: float | None = None
    iterations: int | None = None
    clamp: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism(self.mechanism))
        if self.mechanism is Mechanism.CLEAR:
            return
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.mechanism is Mechanism.INPUT:
            if (self.p1 is None) != (self.p2 is None):
                raise ValueError("set both p1 and p2, or neither")
            if self.p1 is not None and not rr_privacy_feasible(self.p1, self.p2, self.epsilon):
                raise ValueError(
                    f"transition probabilities p1={self.p1}, p2={self.p2} do not give "
                    f"{self.epsilon}-differential privacy"
                )
        if self.mechanism is Mechanism.GRADIENT:
            if self.iterations is None or self.iterations <= 0:
                raise ValueError("gradient perturbation needs a positive iteration count")
            if self.clamp is None or not self.clamp > 0:
                raise ValueError("gradient perturbation needs a positive clamp")

    def transition_probs(self) -> tuple[float, float]:
        if self.p1 is not None:
            return self.p1, self.p2
        p = p_from_epsilon(self.epsilon)
        return p, p


@dataclass
class PrivacyLedger:
    """Record of every privacy-consuming release made by a pipeline."""

    entries: list[tuple[str, float]] = field(default_factory=list)

    def spend(self, label: str, epsilon: float):
        self.entries.append((label, float(epsilon)))

    @property
    def total(self) -> float:
        if not self.entries:
            return 0.0
        return compose_sequential([e for _, e in self.entries])

    def __len__(self):
        return len(self.entries)


def rr_perturb(obs: ObservationSet, p1: float, p2: float, rng) -> ObservationSet:
    """Randomized response: flip +1 with prob. ``p1`` and -1 with prob. ``p2``."""
    for v in (p1, p2):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"flip probability {v} outside [0, 1]")
    y = obs.values
    flip_p = np.where(y > 0, p1, p2)
    flips = _gen(rng).random(y.size) < flip_p
    return obs.with_values(np.where(flips, -y, y))


def p_from_epsilon(epsilon: float) -> float:
    """Symmetric flip probability ``1 / (1 + e**epsilon)`` meeting the budget."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return float(special.expit(-epsilon))


def epsilon_from_p(p: float) -> float:
    if not 0.0 < p < 0.5:
        raise ValueError(f"p must lie in (0, 1/2), got {p}")
    return math.log1p(-p) - math.log(p)


def rr_privacy_feasible(p1: float, p2: float, epsilon: float, rtol: float = 1e-12) -> bool:
    """Whether flip probabilities ``(p1, p2)`` give ``epsilon``-DP.

    Checks ``1 - p2 e**eps <= p1 <= (1 - p2) e**eps`` together with the
    mirrored pair ``1 - p1 e**eps <= p2 <= (1 - p1) e**eps``; the second pair
    only matters when ``p1 + p2 > 1``. ``rtol`` absorbs rounding at the
    calibrated boundary ``p1 = p2 = 1 / (1 + e**eps)``.
    """
    e = math.exp(epsilon)
    slack = rtol * max(1.0, e)

    def one_side(a, b):
        return 1.0 - b * e <= a + slack and a <= (1.0 - b) * e + slack

    return one_side(p1, p2) and one_side(p2, p1)


def sample_laplace(b: float, rng, size=None):
    """Laplace(0, b) draws by inverting the CDF."""
    if not b > 0:
        raise ValueError(f"scale must be positive, got {b}")
    u = _gen(rng).random(size) - 0.5
    # u is in [-0.5, 0.5); 1 - 2|u| lies in (0, 1]
    return -b * np.sign(u) * np.log1p(-2.0 * np.abs(u))


def sample_laplace_gamma_sign(b: float, rng, size=None):
    """Laplace(0, b) draws as ``Gamma(1, b) * V`` with ``V`` uniform on {-1, +1}."""
    if not b > 0:
        raise ValueError(f"scale must be positive, got {b}")
    g = _gen(rng)
    magnitude = g.gamma(1.0, b, size)
    sign = np.where(g.random(size) < 0.5, -1.0, 1.0)
    return magnitude * sign


def objective_sensitivity(model: LinkModel, alpha: float) -> float:
    """A-priori bound on ``max h'/h + h'/(1-h)`` over ``|x| <= alpha``.

    Exactly 1 for the logistic link, ``2 h'(0) / h(-alpha)`` for the
    Gaussian link.
    """
    if not alpha >= 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if model.kind is LinkKind.LOGISTIC:
        return 1.0
    return 2.0 * link_derivative(model, 0.0) / link_value(model, -alpha)


def gradient_l1_sensitivity(clamp: float) -> float:
    """L1 change of a clamped gradient when one rating changes: ``2 * clamp``."""
    if not clamp > 0:
        raise ValueError(f"clamp must be positive, got {clamp}")
    return 2.0 * clamp


def compose_sequential(epsilons) -> float:
    """Total budget of mechanisms run in sequence on the same data."""
    eps = [float(e) for e in epsilons]
    if not eps:
        warnings.warn("composing an empty list of mechanisms", RuntimeWarning, stacklevel=2)
        return 0.0
    if any(not e > 0 for e in eps):
        raise ValueError("every composed epsilon must be positive")
    return math.fsum(eps)
