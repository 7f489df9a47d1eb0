"""Latent Dirichlet Allocation by collapsed Gibbs sampling.

The sampler is the classic token-level collapsed scheme: each token
occurrence carries a topic assignment; one sweep resamples every
assignment from the full conditional

    p(z = j) ~ (n_kw[j, w] + beta) / (n_k[j] + V * beta) * (n_dk[d, j] + alpha)

and the document-topic matrix theta and topic-word matrix phi are read off
the final counts plus priors. Defaults follow common practice: 1000
sweeps, alpha = 50/k, beta = 0.01.

Two input modes exist because the source pipeline feeds TF-IDF-weighted
vectors into LDA even though LDA is defined on counts: "counts" (the
statistically standard default) and "tfidf_weighted", which scales each
TF-IDF row by 10 and rounds to integer pseudo-counts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from numba import njit
from sklearn.base import BaseEstimator

from .errors import AllEmptyDocumentsError, EmptyCorpusError
from .textprep import Vocabulary
from .vectorize import BowMatrix, TfidfMatrix, bow, tfidf

TFIDF_PSEUDOCOUNT_SCALE = 10.0


@dataclass(frozen=True)
class LdaModel:
    """Fitted model: document-topic matrix theta (n x k), topic-word phi (k x V)."""

    theta: np.ndarray
    phi: np.ndarray
    params: dict


def doc_topics(model: LdaModel) -> np.ndarray:
    """The n x k document-topic probability matrix (the t-SNE input for A1)."""
    return model.theta


@njit(cache=True)
def _gibbs_kernel(doc_ids, word_ids, n_docs, V, k, alpha, beta, iterations, seed):
    np.random.seed(seed)
    total = doc_ids.shape[0]
    z = np.empty(total, dtype=np.int64)
    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_kw = np.zeros((k, V), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)

    for t in range(total):
        topic = np.random.randint(0, k)
        z[t] = topic
        n_dk[doc_ids[t], topic] += 1
        n_kw[topic, word_ids[t]] += 1
        n_k[topic] += 1

    cum = np.empty(k, dtype=np.float64)
    v_beta = V * beta
    for _ in range(iterations):
        for t in range(total):
            d = doc_ids[t]
            w = word_ids[t]
            old = z[t]
            n_dk[d, old] -= 1
            n_kw[old, w] -= 1
            n_k[old] -= 1

            acc = 0.0
            for j in range(k):
                acc += (n_kw[j, w] + beta) / (n_k[j] + v_beta) * (n_dk[d, j] + alpha)
                cum[j] = acc
            u = np.random.random() * acc
            new = 0
            while new < k - 1 and u > cum[new]:
                new += 1

            z[t] = new
            n_dk[d, new] += 1
            n_kw[new, w] += 1
            n_k[new] += 1

    return n_dk, n_kw, n_k


def _expand_counts(counts: sp.csr_matrix):
    """Expand an integer doc-term matrix into (doc_ids, word_ids) token streams."""
    csr = sp.csr_matrix(counts)
    doc_ids, word_ids = [], []
    indptr, indices, data = csr.indptr, csr.indices, csr.data
    for d in range(csr.shape[0]):
        for p in range(indptr[d], indptr[d + 1]):
            c = int(data[p])
            if c > 0:
                doc_ids.extend([d] * c)
                word_ids.extend([int(indices[p])] * c)
    return (
        np.asarray(doc_ids, dtype=np.int64),
        np.asarray(word_ids, dtype=np.int64),
    )


class GibbsLda(BaseEstimator):
    """Sklearn-style estimator over an integer document-term matrix.

    After fit, `theta_` holds document-topic probabilities (rows sum to 1)
    and `phi_` topic-word probabilities. Fully deterministic given `seed`.
    """

    def __init__(self, k=5, alpha=None, beta=0.01, iterations=1000, seed=0):
        self.k = k
        self.alpha = alpha
        self.beta = beta
        self.iterations = iterations
        self.seed = seed

    def _validate(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        alpha = 50.0 / self.k if self.alpha is None else float(self.alpha)
        if alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        return alpha

    def fit(self, X, y=None):
        alpha = self._validate()
        counts = sp.csr_matrix(X)
        n_docs, V = counts.shape
        if n_docs == 0:
            raise EmptyCorpusError("no documents to fit")
        doc_ids, word_ids = _expand_counts(counts)
        if doc_ids.size == 0:
            raise AllEmptyDocumentsError("every document is empty")
        n_dk, n_kw, n_k = _gibbs_kernel(
            doc_ids,
            word_ids,
            n_docs,
            V,
            self.k,
            alpha,
            float(self.beta),
            int(self.iterations),
            int(self.seed),
        )
        doc_len = n_dk.sum(axis=1, keepdims=True).astype(np.float64)
        self.theta_ = (n_dk + alpha) / (doc_len + self.k * alpha)
        self.phi_ = (n_kw + self.beta) / (n_k[:, None] + V * self.beta)
        self.alpha_ = alpha
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).theta_


def fit_lda(
    stories,
    vocab: Vocabulary,
    *,
    k=5,
    alpha=None,
    beta=0.01,
    iterations=1000,
    seed=0,
    mode="counts",
    weights: TfidfMatrix | None = None,
    counts: BowMatrix | None = None,
) -> LdaModel:
    """Fit an LDA over tokenized stories.

    mode "counts" uses raw bag-of-words counts; mode "tfidf_weighted"
    converts each TF-IDF row into integer pseudo-counts (scale by 10,
    round), computing the TF-IDF matrix itself unless `weights` is given.
    """
    if mode not in ("counts", "tfidf_weighted"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "tfidf_weighted":
        if weights is None:
            weights = tfidf(counts if counts is not None else bow(stories, vocab), vocab)
        pseudo = weights.matrix.copy().tocsr()
        pseudo.data = np.rint(pseudo.data * TFIDF_PSEUDOCOUNT_SCALE)
        pseudo.eliminate_zeros()
        matrix = pseudo.astype(np.int64)
    else:
        bow_matrix = counts if counts is not None else bow(stories, vocab)
        matrix = bow_matrix.matrix
    est = GibbsLda(k=k, alpha=alpha, beta=beta, iterations=iterations, seed=seed)
    est.fit(matrix)
    params = {
        "k": k,
        "alpha": est.alpha_,
        "beta": beta,
        "iterations": iterations,
        "seed": seed,
        "mode": mode,
    }
    return LdaModel(theta=est.theta_, phi=est.phi_, params=params)


def save_lda(model: LdaModel, path: str | Path) -> None:
    """Serialize a fitted model (config, theta, phi) as JSON for cache reuse."""
    payload = {
        "params": model.params,
        "theta": model.theta.tolist(),
        "phi": model.phi.tolist(),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_lda(path: str | Path) -> LdaModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return LdaModel(
        theta=np.asarray(payload["theta"], dtype=np.float64),
        phi=np.asarray(payload["phi"], dtype=np.float64),
        params=payload["params"],
    )
