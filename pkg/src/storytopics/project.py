"""Exact t-SNE to two dimensions, for feature matrices or distance matrices.

This is the dense O(n^2) algorithm: per-row precision found by binary
search against the target entropy, symmetrized joint probabilities,
early exaggeration, momentum switching and per-coordinate adaptive
gains. The KL divergence is traced every iteration against the true
(unexaggerated) distribution so the trace is comparable across phases.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .errors import NonFiniteInputError, PerplexityTooLargeError

_P_FLOOR = 1e-12
_ENTROPY_TOL = 1e-5
_MAX_BETA_STEPS = 50


def _conditional_probs(sq_dists: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic conditional probabilities at the requested perplexity."""
    n = sq_dists.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        idx = np.concatenate((np.arange(i), np.arange(i + 1, n)))
        Di = sq_dists[i, idx]
        beta = 1.0
        betamin, betamax = -np.inf, np.inf
        expD = np.exp(-Di * beta)
        for _ in range(_MAX_BETA_STEPS):
            expD = np.exp(-Di * beta)
            sumP = expD.sum()
            if sumP <= 0:
                H = 0.0
            else:
                H = np.log(sumP) + beta * float((Di * expD).sum()) / sumP
            diff = H - target
            if abs(diff) < _ENTROPY_TOL:
                break
            if diff > 0:
                betamin = beta
                beta = beta * 2.0 if not np.isfinite(betamax) else (beta + betamax) / 2.0
            else:
                betamax = beta
                beta = beta / 2.0 if not np.isfinite(betamin) else (beta + betamin) / 2.0
        sumP = expD.sum()
        if sumP <= 0:
            P[i, idx] = 1.0 / (n - 1)
        else:
            P[i, idx] = expD / sumP
    return P


def _kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / Q[mask])))


class ExactTsne(BaseEstimator):
    """Dense t-SNE down to 2 coordinates.

    input_kind "features" treats X as an n x d matrix; "distances" treats
    X as a symmetric n x n matrix of distances, which are squared before
    the entropy search. kl_trace_[t] is the divergence of the state
    entering iteration t, against the unexaggerated distribution.
    """

    def __init__(self, perplexity=30.0, learning_rate=200.0, iterations=1000,
                 early_exaggeration=12.0, exaggeration_iters=250, seed=0,
                 input_kind="features"):
        self.perplexity = perplexity
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.early_exaggeration = early_exaggeration
        self.exaggeration_iters = exaggeration_iters
        self.seed = seed
        self.input_kind = input_kind

    def _validate(self, X):
        if self.input_kind not in ("features", "distances"):
            raise ValueError("input_kind must be 'features' or 'distances'")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("expected a 2-d array")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInputError("input contains NaN or infinite values")
        n = X.shape[0]
        if self.input_kind == "distances":
            if X.shape[1] != n:
                raise ValueError("a distance matrix must be square")
            if not np.allclose(X, X.T, atol=1e-8):
                raise ValueError("a distance matrix must be symmetric")
        if not 1.0 <= self.perplexity < (n - 1) / 3.0:
            raise PerplexityTooLargeError(
                f"perplexity {self.perplexity} not in [1, (n-1)/3) for n={n}"
            )
        if self.iterations < 1 or self.exaggeration_iters < 0:
            raise ValueError("iteration counts must be positive")
        if self.iterations < self.exaggeration_iters:
            raise ValueError("iterations must cover the exaggeration phase")
        if self.learning_rate <= 0 or self.early_exaggeration < 1:
            raise ValueError("bad optimizer settings")
        return X

    def fit_transform(self, X, y=None) -> np.ndarray:
        X = self._validate(X)
        n = X.shape[0]
        if self.input_kind == "distances":
            sq = X**2
        else:
            sums = (X**2).sum(axis=1)
            sq = sums[:, None] + sums[None, :] - 2.0 * (X @ X.T)
            np.maximum(sq, 0.0, out=sq)
            np.fill_diagonal(sq, 0.0)

        cond = _conditional_probs(sq, float(self.perplexity))
        P_true = (cond + cond.T) / (2.0 * n)
        P_true = np.maximum(P_true, _P_FLOOR)
        np.fill_diagonal(P_true, 0.0)
        P = P_true * float(self.early_exaggeration)

        rng = np.random.default_rng(self.seed)
        Y = rng.standard_normal((n, 2)) * 1e-4
        velocity = np.zeros_like(Y)
        gains = np.ones_like(Y)
        trace = np.empty(self.iterations, dtype=np.float64)

        for it in range(self.iterations):
            if it == self.exaggeration_iters:
                P = P_true
            sum_Y = (Y**2).sum(axis=1)
            num = -2.0 * (Y @ Y.T)
            num += sum_Y[:, None]
            num += sum_Y[None, :]
            num = 1.0 / (1.0 + num)
            np.fill_diagonal(num, 0.0)
            Q = np.maximum(num / num.sum(), _P_FLOOR)
            trace[it] = _kl_divergence(P_true, Q)

            W = (P - Q) * num
            grad = 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)
            momentum = 0.5 if it < self.exaggeration_iters else 0.8
            same_sign = np.sign(grad) == np.sign(velocity)
            gains = np.where(same_sign, gains * 0.8, gains + 0.2)
            np.maximum(gains, 0.01, out=gains)
            velocity = momentum * velocity - self.learning_rate * (gains * grad)
            Y += velocity
            Y -= Y.mean(axis=0)

        self.embedding_ = Y
        self.kl_trace_ = trace
        return Y

    def fit(self, X, y=None):
        self.fit_transform(X)
        return self


@dataclass(frozen=True)
class Projection2D:
    """2-d coordinates for a corpus, with labels and the optimizer trace."""

    coords: np.ndarray
    story_ids: tuple[str, ...]
    labels: tuple[str, ...]
    kl_trace: tuple[float, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.coords.shape[0]


def tsne(X, story_ids, labels, input_kind="features", **params) -> Projection2D:
    """Project a feature or distance matrix to 2-d; see ExactTsne."""
    story_ids = tuple(story_ids)
    labels = tuple(str(x) for x in labels)
    est = ExactTsne(input_kind=input_kind, **params)
    coords = est.fit_transform(X)
    if coords.shape[0] != len(story_ids) or len(story_ids) != len(labels):
        raise ValueError("coords, story_ids and labels must align")
    return Projection2D(
        coords=coords,
        story_ids=story_ids,
        labels=labels,
        kl_trace=tuple(float(v) for v in est.kl_trace_),
    )


def save_coords_csv(projection: Projection2D, path: str | Path) -> None:
    """Write "story_id,x,y,domain" rows; floats keep full repr precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["story_id", "x", "y", "domain"])
        for i in range(projection.n):
            writer.writerow([
                projection.story_ids[i],
                repr(float(projection.coords[i, 0])),
                repr(float(projection.coords[i, 1])),
                projection.labels[i],
            ])


def load_coords_csv(path: str | Path) -> Projection2D:
    ids, xs, ys, labels = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            ids.append(row["story_id"])
            xs.append(float(row["x"]))
            ys.append(float(row["y"]))
            labels.append(row["domain"])
    coords = np.column_stack([xs, ys]) if ids else np.zeros((0, 2))
    return Projection2D(coords=coords, story_ids=tuple(ids), labels=tuple(labels))


def save_kl_csv(kl_trace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "kl"])
        for i, value in enumerate(kl_trace):
            writer.writerow([i, repr(float(value))])
