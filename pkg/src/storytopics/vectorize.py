"""Bag-of-words counting and TF-IDF weighting over a fixed vocabulary.

The TF-IDF variant is pinned: raw counts, idf = ln(n / df) with no
smoothing, then L2 row normalization. A token present in every document
therefore carries weight exactly zero. Matrices are stored sparse
(n * V is ~14M cells for the full dataset, almost all zero).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .textprep import Vocabulary


@dataclass(frozen=True)
class BowMatrix:
    """Sparse story-by-token count matrix plus a drop report.

    dropped_per_story[i] counts token occurrences of story i that were
    absent from the vocabulary and skipped.
    """

    matrix: sp.csr_matrix
    dropped_per_story: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def V(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class TfidfMatrix:
    """Sparse TF-IDF matrix; every nonzero row has unit Euclidean norm."""

    matrix: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def V(self) -> int:
        return self.matrix.shape[1]


def bow(stories, vocab: Vocabulary) -> BowMatrix:
    """Count vocabulary tokens per story into a sparse CSR matrix."""
    rows, cols, data = [], [], []
    dropped = np.zeros(len(stories), dtype=np.int64)
    for i, story in enumerate(stories):
        counts: dict[int, int] = {}
        for token in story.tokens:
            j = vocab.token_to_index.get(token)
            if j is None:
                dropped[i] += 1
            else:
                counts[j] = counts.get(j, 0) + 1
        for j in sorted(counts):
            rows.append(i)
            cols.append(j)
            data.append(counts[j])
    matrix = sp.csr_matrix(
        (np.asarray(data, dtype=np.int64), (rows, cols)),
        shape=(len(stories), vocab.V),
    )
    return BowMatrix(matrix=matrix, dropped_per_story=dropped)


def tfidf(bow_matrix: BowMatrix, vocab: Vocabulary) -> TfidfMatrix:
    """Weight counts by ln(n/df) and L2-normalize rows (zero rows stay zero)."""
    n = bow_matrix.n
    df = vocab.doc_freq.astype(np.float64)
    idf = np.zeros(vocab.V, dtype=np.float64)
    present = df > 0
    if n > 0:
        idf[present] = np.log(n / df[present])
    weighted = bow_matrix.matrix.astype(np.float64).multiply(idf[np.newaxis, :]).tocsr()
    norms = np.sqrt(np.asarray(weighted.multiply(weighted).sum(axis=1)).ravel())
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    normalized = sp.diags(scale) @ weighted
    normalized = sp.csr_matrix(normalized)
    normalized.eliminate_zeros()
    return TfidfMatrix(matrix=normalized)


def export_triplets(matrix: sp.spmatrix, path: str | Path) -> None:
    """Write a sparse matrix as 'row col value' lines, sorted by (row, col)."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        for idx in order:
            value = coo.data[idx]
            text = str(int(value)) if float(value).is_integer() else repr(float(value))
            fh.write(f"{coo.row[idx]} {coo.col[idx]} {text}\n")
