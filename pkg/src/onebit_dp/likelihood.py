"""Negative log-likelihood of one-bit observations and its gradient.

All objectives act on a dense ``d1 x d2`` iterate ``X`` but only read the
observed entries. Gradients are returned as dense arrays that are exactly
zero off the observation set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .links import LinkModel, PerturbedLink

__all__ = [
    "ObservationSet",
    "NoiseMatrix",
    "neg_log_likelihood",
    "gradient",
    "rr_neg_log_likelihood",
    "rr_gradient",
    "perturbed_objective",
    "perturbed_gradient",
]


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Observed +/-1 ratings on a ``d1 x d2`` grid.

    Parameters
    ----------
    shape : (int, int)
        Matrix dimensions ``(d1, d2)``.
    rows, cols : array_like of int
        Coordinates of the observed entries. Pairs must be unique.
    values : array_like
        Ratings in {-1, +1}, aligned with ``rows``/``cols``.
    """

    shape: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        d1, d2 = (int(s) for s in self.shape)
        rows = np.asarray(self.rows, dtype=np.intp).ravel()
        cols = np.asarray(self.cols, dtype=np.intp).ravel()
        values = np.asarray(self.values).ravel()
        if not (rows.shape == cols.shape == values.shape):
            raise ValueError("rows, cols and values must have equal length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= d1 or cols.min() < 0 or cols.max() >= d2:
                raise ValueError("observation index out of range")
            if np.unique(rows * d2 + cols).size != rows.size:
                raise ValueError("duplicate (row, col) pairs in observation set")
            if not np.all(np.abs(values) == 1):
                raise ValueError("observed values must be -1 or +1")
        object.__setattr__(self, "shape", (d1, d2))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", values.astype(np.int8))
        for arr in (rows, cols, self.values):
            arr.flags.writeable = False

    @classmethod
    def from_entries(cls, shape, entries) -> "ObservationSet":
        """Build from an iterable of ``(i, j, y)`` triples."""
        entries = list(entries)
        if not entries:
            return cls.empty(shape)
        i, j, y = zip(*entries)
        return cls(shape, i, j, y)

    @classmethod
    def empty(cls, shape) -> "ObservationSet":
        z = np.zeros(0, dtype=np.intp)
        return cls(shape, z, z, np.zeros(0, dtype=np.int8))

    @classmethod
    def from_dense(cls, Y, mask=None) -> "ObservationSet":
        """Observe every nonzero entry of ``Y`` (or those selected by ``mask``)."""
        Y = np.asarray(Y)
        mask = Y != 0 if mask is None else np.asarray(mask, dtype=bool)
        i, j = np.nonzero(mask)
        return cls(Y.shape, i, j, np.sign(Y[i, j]))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    def with_values(self, values) -> "ObservationSet":
        return ObservationSet(self.shape, self.rows, self.cols, values)

    def subset(self, idx) -> "ObservationSet":
        idx = np.asarray(idx)
        return ObservationSet(self.shape, self.rows[idx], self.cols[idx], self.values[idx])

    def mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[self.rows, self.cols] = True
        return m

    def to_dense(self) -> np.ndarray:
        """Dense matrix with the ratings on the observation set and 0 elsewhere."""
        Y = np.zeros(self.shape)
        Y[self.rows, self.cols] = self.values
        return Y

    def entries(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))

    def gather(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape != self.shape:
            raise ValueError(f"iterate has shape {X.shape}, observations expect {self.shape}")
        return X[self.rows, self.cols]

    def scatter(self, v) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.rows, self.cols] = v
        return out


@dataclass(frozen=True, eq=False)
class NoiseMatrix:
    """Real-valued noise attached to each observed entry."""

    support: ObservationSet
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.support.n:
            raise ValueError("noise values must cover exactly the observation set")
        object.__setattr__(self, "values", v)

    def matches(self, obs: ObservationSet) -> bool:
        s = self.support
        return (
            s.shape == obs.shape
            and np.array_equal(s.rows, obs.rows)
            and np.array_equal(s.cols, obs.cols)
        )


def _weighted_nll(log_p, log_q, y):
    # -1/2 sum[(1+y) log p + (1-y) log q], selecting the term picked by y
    return float(-np.sum(np.where(y > 0, log_p, log_q)))


def neg_log_likelihood(X, obs: ObservationSet, model: LinkModel) -> float:
    """Negative log-likelihood of the observed ratings under ``h(X)``."""
    x = obs.gather(X)
    if not np.all(np.isfinite(x)):
        raise ValueError("iterate has non-finite entries on the observation set")
    log_p, log_q = model.log_probs(x)
    return _weighted_nll(log_p, log_q, obs.values)


def gradient(X, obs: ObservationSet, model: LinkModel) -> np.ndarray:
    """Gradient of :func:`neg_log_likelihood`, zero off the observation set.

    Per observed entry this is ``-h'/h`` for ``y = +1`` and ``h'/(1-h)``
    for ``y = -1``.
    """
    x = obs.gather(X)
    up, down = model.score_ratios(x)
    return obs.scatter(np.where(obs.values > 0, -up, down))


def _check_rr(pl: PerturbedLink):
    if pl.degenerate:
        raise ValueError(
            f"perturbed link with p1={pl.p1}, p2={pl.p2} carries no signal (p1 + p2 >= 1)"
        )


def rr_neg_log_likelihood(X, obs: ObservationSet, pl: PerturbedLink) -> float:
    """Negative log-likelihood of randomized-response ratings under ``c(X)``."""
    _check_rr(pl)
    c, cc = pl.probs(obs.gather(X))
    return _weighted_nll(np.log(c), np.log(cc), obs.values)


def rr_gradient(X, obs: ObservationSet, pl: PerturbedLink) -> np.ndarray:
    _check_rr(pl)
    x = obs.gather(X)
    c, cc = pl.probs(x)
    dc = pl.derivative(x)
    return obs.scatter(np.where(obs.values > 0, -dc / c, dc / cc))


def _noise_values(obs: ObservationSet, noise: NoiseMatrix) -> np.ndarray:
    if not noise.matches(obs):
        raise ValueError("noise support differs from the observation set")
    return noise.values


def perturbed_objective(X, obs: ObservationSet, model: LinkModel, noise: NoiseMatrix,
                        weight: float = 0.5) -> float:
    """Likelihood with a random linear term: ``NLL(X) - weight * sum H_ij X_ij``.

    With the default ``weight=0.5`` the noise sits inside the ``-1/2`` bracket
    of the likelihood. The objective-perturbation pipeline uses
    ``weight=1.0``, the coefficient its sensitivity calibration assumes.
    """
    h = _noise_values(obs, noise)
    return neg_log_likelihood(X, obs, model) - weight * float(np.dot(h, obs.gather(X)))


def perturbed_gradient(X, obs: ObservationSet, model: LinkModel, noise: NoiseMatrix,
                       weight: float = 0.5) -> np.ndarray:
    h = _noise_values(obs, noise)
    g = gradient(X, obs, model)
    g[obs.rows, obs.cols] -= weight * h
    return g
