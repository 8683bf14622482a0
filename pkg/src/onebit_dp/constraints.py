"""Projection onto C = {X : ||X||_* <= tau, ||X||_inf <= alpha}."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "ConstraintSet",
    "ProjectionResult",
    "project_l1_ball",
    "project_nuclear_ball",
    "clamp_infinity",
    "project_feasible",
    "nuclear_norm",
    "make_projector",
]


@dataclass(frozen=True)
class ConstraintSet:
    """Nuclear-norm radius ``tau`` and entrywise bound ``alpha``.

    ``projection`` selects how :func:`make_projector` enforces the set:
    ``"dykstra"`` projects onto the intersection, ``"nuclear_only"``
    projects onto the nuclear ball alone.
    """

    tau: float
    alpha: float
    projection: str = "dykstra"
    tol: float = 1e-9
    max_rounds: int = 100

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.projection not in ("dykstra", "nuclear_only"):
            raise ValueError(f"unknown projection scheme {self.projection!r}")

    @classmethod
    def default_for(cls, d1: int, d2: int, alpha: float = 1.0, rank: int = 1, **kw):
        """Use the radius ``tau = alpha * sqrt(d1 * d2 * rank)``."""
        return cls(alpha * math.sqrt(d1 * d2 * rank), alpha, **kw)

    def contains(self, X, tol: float = 1e-8) -> bool:
        return bool(
            nuclear_norm(X) <= self.tau * (1 + tol)
            and np.max(np.abs(X), initial=0.0) <= self.alpha + tol
        )


class ProjectionResult(NamedTuple):
    X: np.ndarray
    converged: bool
    rounds: int


def nuclear_norm(X) -> float:
    return float(np.sum(np.linalg.svd(np.asarray(X, dtype=float), compute_uv=False)))


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{w : ||w||_1 <= radius}``.

    Sort-and-threshold algorithm of Duchi et al. (2008), O(k log k).
    """
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, u.size + 1)
    rho = np.nonzero(u * k > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _svd(X):
    try:
        return np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        finite = bool(np.all(np.isfinite(X)))
        raise np.linalg.LinAlgError(
            f"SVD failed for {X.shape} matrix (finite={finite}, "
            f"max|x|={np.max(np.abs(X)) if finite else 'n/a'})"
        ) from exc


def project_nuclear_ball(X, tau: float) -> np.ndarray:
    """Project ``X`` onto ``{Z : ||Z||_* <= tau}`` in Frobenius norm."""
    X = np.asarray(X, dtype=float)
    U, s, Vt = _svd(X)
    if s.sum() <= tau:
        return X.copy()
    s = project_l1_ball(s, tau)
    keep = s > 0
    return (U[:, keep] * s[keep]) @ Vt[keep]


def clamp_infinity(X, alpha: float) -> np.ndarray:
    return np.clip(np.asarray(X, dtype=float), -alpha, alpha)


def project_feasible(X, cs: ConstraintSet, tol: float | None = None,
                     max_rounds: int | None = None) -> ProjectionResult:
    """Projection onto the intersection of the nuclear and infinity balls.

    Dykstra's alternating projections, with two exact shortcuts: if the
    projection onto one ball already lies in the other, it is the answer.
    Stops when consecutive iterates move less than ``tol`` (Frobenius) and
    the two partial projections agree to ``tol``, or after ``max_rounds``
    rounds; the flag in the result records which. An unconverged iterate
    is scaled into the nuclear ball, so the output is always feasible.
    """
    tol = cs.tol if tol is None else tol
    max_rounds = cs.max_rounds if max_rounds is None else max_rounds
    if not tol > 0 or max_rounds < 1:
        raise ValueError("tol must be positive and max_rounds at least 1")
    X = np.asarray(X, dtype=float)
    tau, alpha = cs.tau, cs.alpha

    clamped = clamp_infinity(X, alpha)
    if nuclear_norm(clamped) <= tau:
        return ProjectionResult(clamped, True, 0)
    if not math.isfinite(alpha):
        return ProjectionResult(project_nuclear_ball(X, tau), True, 0)
    shrunk = project_nuclear_ball(X, tau)
    if np.max(np.abs(shrunk)) <= alpha:
        return ProjectionResult(shrunk, True, 0)

    x = X
    p = np.zeros_like(X)
    q = np.zeros_like(X)
    for k in range(1, max_rounds + 1):
        y = project_nuclear_ball(x + p, tau)
        p = x + p - y
        x_new = clamp_infinity(y + q, alpha)
        q = y + q - x_new
        step = np.linalg.norm(x_new - x)
        # x alone can stall for a round while the increments still move;
        # requiring y == x as well makes the state a true fixed point
        gap = np.linalg.norm(y - x_new)
        x = x_new
        if step <= tol and gap <= tol:
            return ProjectionResult(_shrink_into(x, tau), True, k)
    return ProjectionResult(_shrink_into(x, tau), False, max_rounds)


def _shrink_into(X, tau):
    # X already meets the entry bound; scaling by a factor <= 1 keeps that
    # and removes any leftover nuclear-norm excess
    nrm = nuclear_norm(X)
    return X * (tau / nrm) if nrm > tau else X


def make_projector(cs: ConstraintSet):
    """Return ``P(X) -> (X_projected, converged)`` for the configured scheme."""
    if cs.projection == "nuclear_only":
        return lambda X: (project_nuclear_ball(X, cs.tau), True)

    def project(X):
        res = project_feasible(X, cs)
        return res.X, res.converged

    return project
