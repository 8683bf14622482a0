"""Differentially private one-bit matrix completion.

Maximum-likelihood recovery of a bounded low-rank matrix from binary
ratings, solved by spectral projected gradient, with four interchangeable
privacy mechanisms: randomized response on the input, a random linear term
in the objective, noisy clamped gradients, and Laplace noise on the output.
"""

from .constraints import ConstraintSet, project_feasible, project_nuclear_ball
from .data import GroundTruth, gen_synthetic, sample_observations
from .likelihood import ObservationSet, gradient, neg_log_likelihood
from .links import LinkModel, PerturbedLink
from .mechanisms import PrivateResult, RunConfig, run_mechanism
from .metrics import are, avg_hellinger, sign_accuracy, theory_bound
from .privacy import Mechanism, PrivacyLedger, PrivacySpec, RngHandle
from .spg import SolverParams, SolverResult, spg_solve

__version__ = "0.1.0"

__all__ = [
    "ConstraintSet",
    "GroundTruth",
    "LinkModel",
    "Mechanism",
    "ObservationSet",
    "PerturbedLink",
    "PrivacyLedger",
    "PrivacySpec",
    "PrivateResult",
    "RngHandle",
    "RunConfig",
    "SolverParams",
    "SolverResult",
    "are",
    "avg_hellinger",
    "gen_synthetic",
    "gradient",
    "neg_log_likelihood",
    "project_feasible",
    "project_nuclear_ball",
    "run_mechanism",
    "sample_observations",
    "sign_accuracy",
    "spg_solve",
    "theory_bound",
]
