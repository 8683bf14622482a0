"""Spectral projected gradient (SPG) with Barzilai-Borwein steps.

The clean solver uses a nonmonotone Armijo line search along the projected
direction. When a gradient hook is installed (noise injection), the line
search is switched off and exactly ``max_iters`` fixed updates
``x <- P(x - step_scale * gamma * g)`` are taken, so the only data-dependent
quantities released are the hooked gradients.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "SolverParams",
    "TraceEntry",
    "SolverResult",
    "SolverError",
    "bb_step_length",
    "clamp_gradient",
    "spg_solve",
]


class SolverError(RuntimeError):
    """Raised when the objective becomes non-finite; carries the trace so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


@dataclass(frozen=True)
class SolverParams:
    max_iters: int = 500
    bb_step_min: float = 1e-8
    bb_step_max: float = 1e8
    nonmonotone_memory: int = 10
    armijo_const: float = 1e-4
    step_scale: float = 1.0
    tol_obj: float = 1e-6
    line_search: bool = True
    max_backtracks: int = 60

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not 0 < self.bb_step_min <= self.bb_step_max:
            raise ValueError("need 0 < bb_step_min <= bb_step_max")
        if self.nonmonotone_memory < 1:
            raise ValueError("nonmonotone_memory must be at least 1")
        if not 0 < self.armijo_const < 1:
            raise ValueError("armijo_const must lie in (0, 1)")
        if not self.step_scale > 0:
            raise ValueError("step_scale must be positive")


class TraceEntry(NamedTuple):
    objective: float
    step_length: float
    projection_converged: bool
    reference: float


@dataclass
class SolverResult:
    solution: np.ndarray
    trace: list[TraceEntry] = field(default_factory=list)
    iterations_used: int = 0
    converged: bool = False

    @property
    def objective(self) -> float:
        return self.trace[-1].objective if self.trace else math.nan

    @property
    def objectives(self) -> np.ndarray:
        return np.array([t.objective for t in self.trace])


def bb_step_length(x_prev, x_curr, g_prev, g_curr, bb_step_min=1e-8, bb_step_max=1e8) -> float:
    """Barzilai-Borwein step ``<s, s> / <s, u>``, safeguarded and clipped."""
    s = np.ravel(x_curr) - np.ravel(x_prev)
    u = np.ravel(g_curr) - np.ravel(g_prev)
    su = float(np.dot(s, u))
    if not su > 0:
        return bb_step_max
    return float(np.clip(np.dot(s, s) / su, bb_step_min, bb_step_max))


def clamp_gradient(g, C: float) -> np.ndarray:
    """Clamp each gradient entry to ``[-C, C]``."""
    if not C > 0:
        raise ValueError(f"clamp must be positive, got {C}")
    return np.clip(g, -C, C)


def _initial_step(x, g, project, params):
    trial, _ = project(x - g)
    move = float(np.max(np.abs(trial - x), initial=0.0))
    if move == 0.0:
        return params.bb_step_max
    return float(np.clip(1.0 / move, params.bb_step_min, params.bb_step_max))


def spg_solve(
    objective: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    projector: Callable[[np.ndarray], tuple[np.ndarray, bool]],
    x0,
    params: SolverParams = SolverParams(),
    grad_hook: Callable[[np.ndarray, int], np.ndarray] | None = None,
) -> SolverResult:
    """Minimize ``objective`` over the set enforced by ``projector``.

    Parameters
    ----------
    objective, gradient : callable
        ``f(X) -> float`` and ``grad f(X) -> array`` of the same shape as X.
    projector : callable
        ``P(X) -> (X_feasible, converged_flag)``.
    x0 : ndarray
        Starting point; projected before the first iteration.
    params : SolverParams
    grad_hook : callable, optional
        ``hook(g, k) -> g_tilde`` applied to every gradient before it is
        used. Installing a hook forces fixed-step mode.

    Returns
    -------
    SolverResult
        ``trace[0]`` describes the projected starting point; each later
        entry describes one update. In line-search mode the solution is the
        best iterate seen; in fixed-step mode it is the last one, since
        picking by objective value would consult the data again.

    Notes
    -----
    Line-search mode stops when ``|f_k - f_{k-1}| <= tol_obj * max(1, |f_k|)``
    or when the best objective has not improved by that amount during the
    last ``nonmonotone_memory`` iterations.
    """
    fixed = grad_hook is not None or not params.line_search
    x, proj_ok = projector(np.asarray(x0, dtype=float))
    f = float(objective(x))
    trace = [TraceEntry(f, 0.0, proj_ok, f)]
    if not math.isfinite(f):
        raise SolverError("objective is not finite at the starting point", trace)

    def grad_at(z, k):
        g = gradient(z)
        return grad_hook(g, k) if grad_hook is not None else g

    g = grad_at(x, 0)
    gamma = _initial_step(x, g, projector, params)
    history = deque([f], maxlen=params.nonmonotone_memory)
    best_x, best_f, best_k = x, f, 0
    converged = False
    k = 0
    while k < params.max_iters:
        step = params.step_scale * gamma
        candidate, proj_ok = projector(x - step * g)
        d = candidate - x
        if fixed:
            x_new = candidate
            f_new = float(objective(x_new))
            lam = 1.0
        else:
            if not np.any(d):
                converged = True
                break
            f_ref = max(history)
            slope = float(np.vdot(g, d))
            lam = 1.0
            x_new = candidate
            f_new = float(objective(x_new))
            for _ in range(params.max_backtracks):
                if f_new <= f_ref + params.armijo_const * lam * slope:
                    break
                lam *= 0.5
                x_new = x + lam * d
                f_new = float(objective(x_new))
        k += 1
        if not math.isfinite(f_new):
            trace.append(TraceEntry(f_new, lam * step, proj_ok, max(history)))
            raise SolverError(f"objective became non-finite at iteration {k}", trace)
        history.append(f_new)
        trace.append(TraceEntry(f_new, lam * step, proj_ok, max(history)))
        if fixed and k == params.max_iters:
            # no further gradient: each hooked gradient is a privacy release
            x = x_new
            break

        g_new = grad_at(x_new, k)
        gamma = bb_step_length(x, x_new, g, g_new, params.bb_step_min, params.bb_step_max)
        x, g, f_prev, f = x_new, g_new, f, f_new
        if fixed:
            continue
        thresh = params.tol_obj * max(1.0, abs(f))
        if f < best_f - thresh:
            best_k = k
        if f < best_f:
            best_x, best_f = x, f
        if abs(f - f_prev) <= thresh or k - best_k >= params.nonmonotone_memory:
            converged = True
            break
    if fixed or params.max_iters == 0:
        converged = True
    elif best_f < f:
        x = best_x
    return SolverResult(x, trace, k, converged)
