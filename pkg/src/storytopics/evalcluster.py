"""Clustering and cluster-vs-annotation agreement.

k-means is Lloyd's algorithm with kmeans++ seeding, deterministic for a
fixed seed. Agreement scores (purity, adjusted Rand index, normalized
mutual information with arithmetic-mean normalization) are computed from
the contingency table. Classical MDS turns a distance matrix into
coordinates so the same k-means path works for distance-based runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from .errors import KTooLargeError, NonFiniteInputError, UnknownStoryError


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    centers[0] = X[int(rng.integers(n))]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            idx = int(rng.integers(n))
        centers[c] = X[idx]
        np.minimum(d2, ((X - centers[c]) ** 2).sum(axis=1), out=d2)
    return centers


class LloydKMeans(BaseEstimator):
    """Plain Lloyd iterations from kmeans++ starts; one run per estimator.

    inertia_trace_ records the assignment-phase inertia of every sweep;
    a cluster that empties out is reseeded at the point currently worst
    served by its assigned center.
    """

    def __init__(self, k=5, seed=0, max_iter=300):
        self.k = k
        self.seed = seed
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError("expected a non-empty 2-d array")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInputError("input contains NaN or infinite values")
        n = X.shape[0]
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.k > n:
            raise KTooLargeError(f"k={self.k} exceeds {n} points")
        rng = np.random.default_rng(self.seed)
        centers = _kmeans_pp(X, self.k, rng)
        trace = []
        labels = None
        for _ in range(self.max_iter):
            dists = cdist(X, centers, "sqeuclidean")
            new_labels = dists.argmin(axis=1)
            point_d = dists[np.arange(n), new_labels]
            trace.append(float(point_d.sum()))
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for c in range(self.k):
                mask = labels == c
                if mask.any():
                    centers[c] = X[mask].mean(axis=0)
                else:
                    centers[c] = X[int(point_d.argmax())]
        self.labels_ = labels.astype(np.int64)
        self.cluster_centers_ = centers
        self.inertia_ = trace[-1]
        self.inertia_trace_ = tuple(trace)
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        return cdist(X, self.cluster_centers_, "sqeuclidean").argmin(axis=1).astype(np.int64)


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    inertia_trace: tuple[float, ...]
    seed: int


def kmeans(X, k=5, seed=0, max_iter=300) -> ClusterAssignment:
    est = LloydKMeans(k=k, seed=seed, max_iter=max_iter).fit(X)
    return ClusterAssignment(
        labels=est.labels_,
        centers=est.cluster_centers_,
        inertia=est.inertia_,
        inertia_trace=est.inertia_trace_,
        seed=seed,
    )


def kmeans_best(X, k=5, seeds=range(10), max_iter=300) -> ClusterAssignment:
    """Best of several seeded runs; ties broken by the lower seed."""
    best = None
    for seed in seeds:
        run = kmeans(X, k=k, seed=int(seed), max_iter=max_iter)
        if best is None or (run.inertia, run.seed) < (best.inertia, best.seed):
            best = run
    if best is None:
        raise ValueError("at least one seed is required")
    return best


# --- agreement ----------------------------------------------------------------

def _contingency(pred, true):
    pred = np.asarray(pred)
    true = np.asarray(true)
    if pred.shape != true.shape or pred.ndim != 1 or pred.size == 0:
        raise ValueError("label arrays must be equal-length, 1-d, non-empty")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(true, return_inverse=True)
    table = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return table


def purity(pred, true) -> float:
    """Fraction of points in their cluster's majority annotation class."""
    table = _contingency(pred, true)
    return float(table.max(axis=0).sum() / table.sum())


def adjusted_rand_index(pred, true) -> float:
    table = _contingency(pred, true)
    n = int(table.sum())
    sum_cells = sum(comb(int(v), 2) for v in table.ravel())
    sum_rows = sum(comb(int(v), 2) for v in table.sum(axis=1))
    sum_cols = sum(comb(int(v), 2) for v in table.sum(axis=0))
    expected = sum_rows * sum_cols / comb(n, 2) if n >= 2 else 0.0
    max_index = (sum_rows + sum_cols) / 2.0
    denom = max_index - expected
    if denom == 0:
        # both partitions carry no pair information: identical by convention
        return 1.0
    return float((sum_cells - expected) / denom)


def _entropy(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-(p * np.log(p)).sum())


def normalized_mutual_info(pred, true) -> float:
    """NMI with arithmetic-mean normalization of the two entropies."""
    table = _contingency(pred, true)
    n = table.sum()
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    h_true = _entropy(rows)
    h_pred = _entropy(cols)
    if h_true == 0.0 and h_pred == 0.0:
        return 1.0
    mi = 0.0
    for t in range(table.shape[0]):
        for p in range(table.shape[1]):
            v = table[t, p]
            if v > 0:
                mi += (v / n) * np.log(v * n / (rows[t] * cols[p]))
    mean_h = (h_true + h_pred) / 2.0
    return float(max(mi, 0.0) / mean_h)


@dataclass(frozen=True)
class AgreementScores:
    purity: float
    ari: float
    nmi: float


def agreement(pred, true) -> AgreementScores:
    return AgreementScores(
        purity=purity(pred, true),
        ari=adjusted_rand_index(pred, true),
        nmi=normalized_mutual_info(pred, true),
    )


# --- neighbors ----------------------------------------------------------------

@dataclass(frozen=True)
class Neighbor:
    story_id: str
    distance: float


def neighbor_report(matrix, story_ids, query_id, k=5) -> list[Neighbor]:
    """k nearest stories to the query by the given distance matrix.

    Self and NaN entries are excluded; ties order by (distance, story_id).
    """
    story_ids = list(story_ids)
    try:
        qi = story_ids.index(query_id)
    except ValueError:
        raise UnknownStoryError(f"story {query_id!r} is not in this corpus") from None
    matrix = np.asarray(matrix, dtype=np.float64)
    candidates = [
        (float(matrix[qi, j]), story_ids[j])
        for j in range(len(story_ids))
        if j != qi and np.isfinite(matrix[qi, j])
    ]
    candidates.sort()
    return [Neighbor(story_id=s, distance=d) for d, s in candidates[:k]]


def format_neighbor_table(query_id, neighbors) -> str:
    width = max([len(query_id)] + [len(nb.story_id) for nb in neighbors] + [8])
    lines = [f"{'story_id':<{width}}  distance"]
    for nb in neighbors:
        lines.append(f"{nb.story_id:<{width}}  {nb.distance:.6f}")
    return "\n".join(lines)


# --- distances to coordinates ---------------------------------------------------

def classical_mds(D, dims=10) -> np.ndarray:
    """Classical (Torgerson) MDS: double-centered Gram, top eigenpairs.

    Components with non-positive eigenvalues become zero columns; each
    kept column is oriented so its largest-magnitude entry is positive.
    """
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError("expected a square distance matrix")
    if not np.all(np.isfinite(D)):
        raise NonFiniteInputError("distance matrix contains NaN or infinite values")
    n = D.shape[0]
    sq = D**2
    J = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * (J @ sq @ J)
    B = (B + B.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(B)
    order = np.argsort(eigvals)[::-1][:dims]
    coords = np.zeros((n, dims), dtype=np.float64)
    for out_col, idx in enumerate(order):
        lam = eigvals[idx]
        if lam <= 0:
            continue
        col = eigvecs[:, idx] * np.sqrt(lam)
        j = int(np.argmax(np.abs(col)))
        if col[j] < 0:
            col = -col
        coords[:, out_col] = col
    return coords
