"""Per-story embedding matrices and their reduction to a flat representation.

Each story becomes a t x d matrix of word vectors (t = embeddable tokens,
in story order). Stories longer than s rows are compressed to s x d via
truncated SVD of the row-centered matrix; shorter stories are zero-padded.
Flattening the s x d blocks row-major gives one n x (s*d) matrix for the
whole corpus. s defaults to the shortest non-empty story in the corpus.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (
    AllEmptyError,
    MalformedHeaderError,
    ShapeMismatchError,
    TruncatedFileError,
)

_FLAT_MAGIC = b"FLAT"
_FLAT_VERSION = 1


@dataclass(frozen=True)
class StoryMatrix:
    """One story's word vectors stacked in token order (t x d, float64)."""

    story_id: str
    matrix: np.ndarray

    @property
    def t(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]


def embed_story(story, table) -> StoryMatrix:
    """Stack the embeddable tokens' vectors; OOV tokens are dropped."""
    tokens = getattr(story, "tokens", story)
    story_id = getattr(story, "story_id", "")
    rows = []
    for token in tokens:
        idx, _ = table.resolve(token)
        if idx >= 0:
            rows.append(table.matrix[idx])
    if rows:
        matrix = np.asarray(rows, dtype=np.float64)
    else:
        matrix = np.zeros((0, table.dim), dtype=np.float64)
    return StoryMatrix(story_id=story_id, matrix=matrix)


def shortest_length(story_matrices) -> int:
    """Smallest t over non-empty stories; raises if every story is empty."""
    best = None
    for sm in story_matrices:
        t = sm.t if isinstance(sm, StoryMatrix) else sm.shape[0]
        if t >= 1 and (best is None or t < best):
            best = t
    if best is None:
        raise AllEmptyError("every story has zero embeddable tokens")
    return best


def _fix_signs(rows: np.ndarray) -> np.ndarray:
    # orient each component so its largest-magnitude entry is positive
    for i in range(rows.shape[0]):
        j = int(np.argmax(np.abs(rows[i])))
        if rows[i, j] < 0:
            rows[i] = -rows[i]
    return rows


def pca_reduce(matrix: np.ndarray, s: int, center: bool = True) -> np.ndarray:
    """Reduce a t x d story matrix to exactly s x d.

    t > s: truncated SVD of the (optionally row-centered) matrix; the
    output rows are singular values times right singular vectors, ordered
    by decreasing singular value, each row oriented so its largest-
    magnitude entry is positive. t <= s: the matrix is returned as-is
    (uncentered) and zero-padded to s rows.
    """
    if s < 1:
        raise ValueError("s must be >= 1")
    matrix = np.asarray(matrix, dtype=np.float64)
    t, d = matrix.shape
    if t <= s:
        out = np.zeros((s, d), dtype=np.float64)
        out[:t] = matrix
        return out
    work = matrix - matrix.mean(axis=0, keepdims=True) if center else matrix
    _, sing, vt = np.linalg.svd(work, full_matrices=False)
    out = np.zeros((s, d), dtype=np.float64)
    keep = min(s, sing.shape[0])  # rank-deficient inputs pad with zero rows
    out[:keep] = sing[:keep, None] * vt[:keep]
    return _fix_signs(out)


@dataclass(frozen=True)
class FlatRepresentation:
    """All stories' reduced matrices flattened row-major into n x (s*d)."""

    matrix: np.ndarray
    story_ids: tuple[str, ...]
    s: int
    d: int

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def assemble_flat(reduced, story_ids, s: int, d: int) -> FlatRepresentation:
    """Flatten s x d blocks into rows; shape errors point at the culprit."""
    story_ids = tuple(story_ids)
    if len(reduced) != len(story_ids):
        raise ShapeMismatchError(
            f"{len(reduced)} blocks for {len(story_ids)} story ids"
        )
    matrix = np.zeros((len(reduced), s * d), dtype=np.float64)
    for i, block in enumerate(reduced):
        block = np.asarray(block, dtype=np.float64)
        if block.shape != (s, d):
            raise ShapeMismatchError(
                f"story {story_ids[i]!r}: block is {block.shape}, expected {(s, d)}"
            )
        matrix[i] = block.ravel()
    return FlatRepresentation(matrix=matrix, story_ids=story_ids, s=s, d=d)


class EmbeddingFlattener(BaseEstimator, TransformerMixin):
    """Estimator facade: token lists -> flat n x (s*d) embedding features.

    s=None picks the corpus-wide shortest non-empty story length at fit
    time. Stories with no embeddable tokens become all-zero rows and are
    recorded in empty_story_ids_.
    """

    def __init__(self, table=None, s=None, center=True):
        self.table = table
        self.s = s
        self.center = center

    def fit(self, X, y=None):
        if self.table is None:
            raise ValueError("an embedding table is required")
        matrices = [embed_story(story, self.table) for story in X]
        self.s_ = int(self.s) if self.s is not None else shortest_length(matrices)
        if self.s_ < 1:
            raise ValueError("s must be >= 1")
        self.d_ = self.table.dim
        self.empty_story_ids_ = tuple(
            sm.story_id if sm.story_id else str(i)
            for i, sm in enumerate(matrices)
            if sm.t == 0
        )
        return self

    def transform(self, X) -> np.ndarray:
        matrices = [embed_story(story, self.table) for story in X]
        reduced = [pca_reduce(sm.matrix, self.s_, center=self.center) for sm in matrices]
        ids = [sm.story_id if sm.story_id else str(i) for i, sm in enumerate(matrices)]
        return assemble_flat(reduced, ids, self.s_, self.d_).matrix

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)


def flatten_corpus(stories, table, s=None, center=True) -> FlatRepresentation:
    """One-call path from tokenized stories to a FlatRepresentation."""
    matrices = [embed_story(story, table) for story in stories]
    if s is None:
        s = shortest_length(matrices)
    reduced = [pca_reduce(sm.matrix, s, center=center) for sm in matrices]
    ids = [sm.story_id if sm.story_id else str(i) for i, sm in enumerate(matrices)]
    return assemble_flat(reduced, ids, s, table.dim)


# --- binary cache ------------------------------------------------------------

def save_flat(matrix: np.ndarray, path: str | Path) -> None:
    """FLAT file: magic, u32 version, u64 n, u64 width, f64 LE row-major."""
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    if matrix.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    n, width = matrix.shape
    with open(path, "wb") as fh:
        fh.write(_FLAT_MAGIC)
        fh.write(struct.pack("<IQQ", _FLAT_VERSION, n, width))
        fh.write(matrix.tobytes())


def load_flat(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(4 + 4 + 8 + 8)
        if len(head) < 24 or head[:4] != _FLAT_MAGIC:
            raise MalformedHeaderError("not a FLAT file")
        version, n, width = struct.unpack("<IQQ", head[4:24])
        if version != _FLAT_VERSION:
            raise MalformedHeaderError(f"unsupported FLAT version {version}")
        payload = fh.read(8 * n * width)
        if len(payload) != 8 * n * width:
            raise TruncatedFileError("FLAT payload shorter than header promises")
        if fh.read(1):
            raise MalformedHeaderError("trailing bytes after FLAT payload")
    return np.frombuffer(payload, dtype="<f8").reshape(n, width).copy()
