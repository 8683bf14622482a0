"""Link functions for the one-bit observation model.

An observed rating is +1 with probability ``h(x)`` where ``x`` is the
underlying matrix entry. Two links are supported: logistic and Gaussian
(probit with scale ``sigma``). Randomized response turns ``h`` into the
perturbed link ``c(x) = h(x)(1 - p1) + (1 - h(x)) p2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

__all__ = [
    "LinkKind",
    "LinkModel",
    "PerturbedLink",
    "ModelConstants",
    "link_value",
    "link_derivative",
    "perturbed_link_value",
    "model_constants",
    "perturbed_constants",
    "PROB_FLOOR",
]

# h is kept inside [PROB_FLOOR, 1 - PROB_FLOOR] so log-likelihoods stay finite.
PROB_FLOOR = 1e-15
_LOGISTIC_CUTOFF = 36.0
_GAUSSIAN_CUTOFF = 8.0
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class LinkKind(str, Enum):
    LOGISTIC = "logistic"
    GAUSSIAN = "gaussian"


def _check_finite(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("link functions require finite arguments")
    return x


def _unwrap(x, out):
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class LinkModel:
    """A link function ``h`` mapping real scores to P(Y = +1).

    Parameters
    ----------
    kind : LinkKind or str
        ``"logistic"`` or ``"gaussian"``.
    sigma : float
        Scale of the Gaussian link, ``h(x) = Phi(x / sigma)``. Ignored for
        the logistic link.
    """

    kind: LinkKind = LinkKind.LOGISTIC
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LinkKind(self.kind))
        if self.kind is LinkKind.GAUSSIAN and not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"Gaussian link needs sigma > 0, got {self.sigma}")

    @classmethod
    def logistic(cls) -> "LinkModel":
        return cls(LinkKind.LOGISTIC)

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "LinkModel":
        return cls(LinkKind.GAUSSIAN, sigma)

    def probs(self, x):
        """Return ``(h(x), 1 - h(x))``, each computed without cancellation
        and clamped to ``[PROB_FLOOR, 1 - PROB_FLOOR]``."""
        x = np.asarray(x, dtype=float)
        if self.kind is LinkKind.LOGISTIC:
            p, q = special.expit(x), special.expit(-x)
        else:
            z = x / self.sigma
            p, q = special.ndtr(z), special.ndtr(-z)
        lo, hi = PROB_FLOOR, 1.0 - PROB_FLOOR
        return np.clip(p, lo, hi), np.clip(q, lo, hi)

    def log_probs(self, x):
        """Return ``(log h(x), log(1 - h(x)))`` in a numerically stable form."""
        x = np.asarray(x, dtype=float)
        if self.kind is LinkKind.LOGISTIC:
            return -np.logaddexp(0.0, -x), -np.logaddexp(0.0, x)
        z = x / self.sigma
        return special.log_ndtr(z), special.log_ndtr(-z)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is LinkKind.LOGISTIC:
            return special.expit(x) * special.expit(-x)
        z = x / self.sigma
        return _INV_SQRT_2PI * np.exp(-0.5 * z * z) / self.sigma

    def score_ratios(self, x):
        """Return ``(h'/h, h'/(1-h))`` evaluated stably.

        For the logistic link these are exactly ``1 - h`` and ``h``.
        """
        x = np.asarray(x, dtype=float)
        if self.kind is LinkKind.LOGISTIC:
            return special.expit(-x), special.expit(x)
        z = x / self.sigma
        log_pdf = -0.5 * z * z - 0.5 * math.log(2.0 * math.pi) - math.log(self.sigma)
        return np.exp(log_pdf - special.log_ndtr(z)), np.exp(log_pdf - special.log_ndtr(-z))


@dataclass(frozen=True)
class PerturbedLink:
    """Observation probability after randomized response.

    A +1 is reported as -1 with probability ``p1`` and a -1 is reported
    as +1 with probability ``p2``, so
    ``c(x) = p2 + (1 - p1 - p2) h(x)``.
    """

    base: LinkModel
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def symmetric(cls, base: LinkModel, p: float) -> "PerturbedLink":
        return cls(base, p, p)

    @property
    def slope(self) -> float:
        return 1.0 - self.p1 - self.p2

    @property
    def degenerate(self) -> bool:
        return self.slope <= 0.0

    def probs(self, x):
        """Return ``(c(x), 1 - c(x))``, clamped like :meth:`LinkModel.probs`."""
        h, hc = self.base.probs(x)
        s = self.slope
        c = self.p2 + s * h
        cc = self.p1 + s * hc
        lo, hi = PROB_FLOOR, 1.0 - PROB_FLOOR
        return np.clip(c, lo, hi), np.clip(cc, lo, hi)

    def derivative(self, x):
        return self.slope * self.base.derivative(x)


@dataclass(frozen=True)
class ModelConstants:
    """Steepness ``L`` and flatness ``beta`` of a link on ``|x| <= alpha``."""

    steepness: float
    flatness: float
    alpha: float


def link_value(model: LinkModel, x):
    """Evaluate ``h(x)``.

    Logistic: ``1 / (1 + exp(-x))``. Gaussian: ``Phi(x / sigma)``; scipy's
    ``ndtr`` is erfc-based and keeps relative accuracy in the tails.
    """
    x = _check_finite(x)
    return _unwrap(x, model.probs(x)[0])


def link_derivative(model: LinkModel, x):
    x = _check_finite(x)
    return _unwrap(x, model.derivative(x))


def perturbed_link_value(pl: PerturbedLink, x):
    x = _check_finite(x)
    h = pl.base.probs(x)[0]
    return _unwrap(x, h * (1.0 - pl.p1) + (1.0 - h) * pl.p2)


def model_constants(model: LinkModel, alpha: float) -> ModelConstants:
    """Closed-form steepness and flatness constants of ``h`` on ``[-alpha, alpha]``.

    Logistic: ``L = 1`` and ``beta = e**alpha``. Gaussian:
    ``L <= 8 (alpha/sigma + 1) / sigma`` and
    ``beta <= pi sigma**2 exp(alpha**2 / (2 sigma**2))``.
    """
    if not alpha >= 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if model.kind is LinkKind.LOGISTIC:
        return ModelConstants(1.0, math.exp(alpha), alpha)
    s = model.sigma
    steep = 8.0 * (alpha / s + 1.0) / s
    flat = math.pi * s * s * math.exp(alpha * alpha / (2.0 * s * s))
    return ModelConstants(steep, flat, alpha)


def perturbed_constants(pl: PerturbedLink, alpha: float) -> ModelConstants:
    """Bounds on steepness/flatness of the symmetric perturbed link ``c``.

    ``L_c <= (1 - 2p) L_h`` and ``beta_c <= 1 / (2 (1 - 2p)**2) + beta_h / 2``.
    """
    if pl.p1 != pl.p2:
        raise ValueError("constant bounds are only available for p1 == p2")
    p = pl.p1
    if not 0.0 <= p < 0.5:
        raise ValueError(f"perturbed link is degenerate for p = {p}")
    base = model_constants(pl.base, alpha)
    shrink = 1.0 - 2.0 * p
    return ModelConstants(
        shrink * base.steepness,
        1.0 / (2.0 * shrink * shrink) + 0.5 * base.flatness,
        alpha,
    )
