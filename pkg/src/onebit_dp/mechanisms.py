"""End-to-end completion pipelines: the clear baseline and four private variants.

Each pipeline takes an :class:`ObservationSet` and a :class:`RunConfig` and
returns a :class:`PrivateResult`, a :class:`SolverResult` extended with the
privacy ledger of the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .constraints import ConstraintSet, make_projector
from .likelihood import (
    NoiseMatrix,
    ObservationSet,
    gradient,
    neg_log_likelihood,
    perturbed_gradient,
    perturbed_objective,
    rr_gradient,
    rr_neg_log_likelihood,
)
from .links import LinkModel, PerturbedLink
from .privacy import (
    Mechanism,
    PrivacyLedger,
    PrivacySpec,
    RngHandle,
    gradient_l1_sensitivity,
    objective_sensitivity,
    rr_perturb,
    sample_laplace,
)
from .spg import SolverParams, SolverResult, clamp_gradient, spg_solve

__all__ = [
    "RunConfig",
    "PrivateResult",
    "run_clear",
    "run_input_perturbation",
    "run_objective_perturbation",
    "run_gradient_perturbation",
    "run_output_perturbation",
    "run_mechanism",
    "output_noise_scale",
    "GRADIENT_DEFAULT_ITERS",
    "GRADIENT_DEFAULT_CLAMP",
]

GRADIENT_DEFAULT_ITERS = 50
GRADIENT_DEFAULT_CLAMP = 0.5

# stream ids keep the noise of different pipeline stages independent
_STREAM_FLIPS = 11
_STREAM_OBJECTIVE = 12
_STREAM_GRADIENT = 13
_STREAM_OUTPUT = 14


@dataclass(frozen=True)
class RunConfig:
    privacy: PrivacySpec
    model: LinkModel
    constraints: ConstraintSet
    solver: SolverParams = SolverParams()
    seed: int = 0

    def rng(self, stream: int) -> RngHandle:
        return RngHandle(self.seed, stream)

    @classmethod
    def build(cls, mechanism, epsilon, shape, *, link: LinkModel | None = None,
              alpha: float = 1.0, rank: int = 1, seed: int = 0,
              projection: str = "dykstra", solver: SolverParams | None = None,
              iterations: int = GRADIENT_DEFAULT_ITERS, clamp: float = GRADIENT_DEFAULT_CLAMP):
        """Convenience constructor with the defaults used by the experiments."""
        mechanism = Mechanism(mechanism)
        if mechanism is Mechanism.GRADIENT:
            privacy = PrivacySpec(mechanism, epsilon, iterations=iterations, clamp=clamp)
        elif mechanism is Mechanism.CLEAR:
            privacy = PrivacySpec(mechanism)
        else:
            privacy = PrivacySpec(mechanism, epsilon)
        cs = ConstraintSet.default_for(*shape, alpha=alpha, rank=rank, projection=projection)
        return cls(privacy, link or LinkModel.logistic(), cs, solver or SolverParams(), seed)


@dataclass
class PrivateResult(SolverResult):
    ledger: PrivacyLedger = field(default_factory=PrivacyLedger)
    mechanism: Mechanism = Mechanism.CLEAR
    noise_scale: float = 0.0
    pre_noise: np.ndarray | None = None

    @property
    def epsilon_spent(self) -> float:
        return self.ledger.total


def _wrap(res: SolverResult, mechanism, ledger=None, **kw) -> PrivateResult:
    return PrivateResult(res.solution, res.trace, res.iterations_used, res.converged,
                         ledger=ledger or PrivacyLedger(), mechanism=mechanism, **kw)


def _expect(cfg: RunConfig, mechanism: Mechanism):
    if cfg.privacy.mechanism is not mechanism:
        raise ValueError(
            f"config is for {cfg.privacy.mechanism.value}, pipeline expects {mechanism.value}"
        )


def _solve(obs: ObservationSet, cfg: RunConfig, objective, grad, params=None, hook=None):
    x0 = np.zeros(obs.shape)
    return spg_solve(objective, grad, make_projector(cfg.constraints), x0,
                     params or cfg.solver, grad_hook=hook)


def _clean_solve(obs, cfg):
    model = cfg.model
    return _solve(obs, cfg,
                  lambda X: neg_log_likelihood(X, obs, model),
                  lambda X: gradient(X, obs, model))


def run_clear(obs: ObservationSet, cfg: RunConfig) -> PrivateResult:
    """Constrained maximum likelihood with no privacy protection."""
    _expect(cfg, Mechanism.CLEAR)
    return _wrap(_clean_solve(obs, cfg), Mechanism.CLEAR)


def run_input_perturbation(obs: ObservationSet, cfg: RunConfig) -> PrivateResult:
    """Randomized response on the ratings, then MLE under the perturbed link."""
    _expect(cfg, Mechanism.INPUT)
    p1, p2 = cfg.privacy.transition_probs()
    pl = PerturbedLink(cfg.model, p1, p2)
    if pl.degenerate:
        raise ValueError(f"p1={p1}, p2={p2} leave no signal in the ratings")
    noisy = rr_perturb(obs, p1, p2, cfg.rng(_STREAM_FLIPS))
    ledger = PrivacyLedger()
    ledger.spend("randomized_response", cfg.privacy.epsilon)
    res = _solve(noisy, cfg,
                 lambda X: rr_neg_log_likelihood(X, noisy, pl),
                 lambda X: rr_gradient(X, noisy, pl))
    return _wrap(res, Mechanism.INPUT, ledger, noise_scale=p1)


def run_objective_perturbation(obs: ObservationSet, cfg: RunConfig) -> PrivateResult:
    """Add a random linear term ``sum H_ij X_ij`` to the likelihood, then solve.

    ``H`` is drawn once per run, i.i.d. Laplace(0, Delta / eps) on the
    observed entries, with ``Delta`` the a-priori sensitivity bound of the
    link on ``[-alpha, alpha]``.
    """
    _expect(cfg, Mechanism.OBJECTIVE)
    eps = cfg.privacy.epsilon
    delta = objective_sensitivity(cfg.model, cfg.constraints.alpha)
    scale = delta / eps
    if scale > 0:
        h = sample_laplace(scale, cfg.rng(_STREAM_OBJECTIVE), obs.n)
    else:
        h = np.zeros(obs.n)
    noise = NoiseMatrix(obs, h)
    ledger = PrivacyLedger()
    ledger.spend("objective_noise", eps)
    model = cfg.model
    res = _solve(obs, cfg,
                 lambda X: perturbed_objective(X, obs, model, noise, weight=1.0),
                 lambda X: perturbed_gradient(X, obs, model, noise, weight=1.0))
    return _wrap(res, Mechanism.OBJECTIVE, ledger, noise_scale=scale)


def run_gradient_perturbation(obs: ObservationSet, cfg: RunConfig) -> PrivateResult:
    """Exactly K projected steps on clamped, Laplace-noised gradients.

    Every step spends ``eps / K``; noise has scale ``K * 2C / eps`` on the
    observed entries.
    """
    _expect(cfg, Mechanism.GRADIENT)
    spec = cfg.privacy
    K, C, eps = spec.iterations, spec.clamp, spec.epsilon
    if K is None or K <= 0:
        raise ValueError("gradient perturbation needs K >= 1")
    scale = K * gradient_l1_sensitivity(C) / eps
    rng = cfg.rng(_STREAM_GRADIENT)
    ledger = PrivacyLedger()
    rows, cols, n = obs.rows, obs.cols, obs.n

    def hook(g, k):
        g = clamp_gradient(g, C)
        if scale > 0:
            g[rows, cols] += sample_laplace(scale, rng, n)
        ledger.spend(f"gradient_step_{k}", eps / K)
        return g

    model = cfg.model
    params = replace(cfg.solver, max_iters=K, line_search=False)
    res = _solve(obs, cfg,
                 lambda X: neg_log_likelihood(X, obs, model),
                 lambda X: gradient(X, obs, model),
                 params=params, hook=hook)
    return _wrap(res, Mechanism.GRADIENT, ledger, noise_scale=scale)


def output_noise_scale(alpha: float, epsilon: float) -> float:
    """Laplace scale ``2 alpha / eps`` for releasing a matrix bounded by ``alpha``."""
    return 2.0 * alpha / epsilon


def run_output_perturbation(obs: ObservationSet, cfg: RunConfig,
                            clean: SolverResult | None = None) -> PrivateResult:
    """Solve cleanly, then add Laplace(0, 2 alpha / eps) to every entry.

    The noisy matrix is not projected back onto the constraint set. A clean
    solve of the same data may be passed as ``clean`` to skip recomputation.
    """
    _expect(cfg, Mechanism.OUTPUT)
    eps = cfg.privacy.epsilon
    res = clean if clean is not None else _clean_solve(obs, cfg)
    scale = output_noise_scale(cfg.constraints.alpha, eps)
    base = res.solution
    if scale > 0:
        noisy = base + sample_laplace(scale, cfg.rng(_STREAM_OUTPUT), base.shape)
    else:
        noisy = base.copy()
    ledger = PrivacyLedger()
    ledger.spend("output_noise", eps)
    out = _wrap(res, Mechanism.OUTPUT, ledger, noise_scale=scale, pre_noise=base)
    out.solution = noisy
    return out


_PIPELINES = {
    Mechanism.CLEAR: run_clear,
    Mechanism.INPUT: run_input_perturbation,
    Mechanism.OBJECTIVE: run_objective_perturbation,
    Mechanism.GRADIENT: run_gradient_perturbation,
    Mechanism.OUTPUT: run_output_perturbation,
}


def run_mechanism(obs: ObservationSet, cfg: RunConfig) -> PrivateResult:
    """Dispatch on ``cfg.privacy.mechanism``."""
    return _PIPELINES[cfg.privacy.mechanism](obs, cfg)
