"""Word embeddings: a from-scratch skip-gram trainer and a word2vec binary loader.

The trainer implements skip-gram with negative sampling in the reference
word2vec style: dynamic window radius, unigram^0.75 negative-sampling
distribution, linearly decaying learning rate, input vectors initialized
uniformly in [-0.5/d, +0.5/d] and output vectors at zero. Training is
single-worker and fully deterministic for a fixed seed.

The binary format is the classic one: an ASCII header "<count> <dim>\\n",
then per token the token bytes terminated by a space followed by dim
little-endian float32 values, optionally followed by a newline (consumed
if present).
"""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator

from .errors import (
    EmptyCorpusError,
    MalformedHeaderError,
    NoTokenMeetsMinCountError,
    TruncatedFileError,
)

_NEG_TABLE_DOMAIN = 2**31 - 1
_UNIGRAM_POWER = 0.75


@dataclass
class EmbeddingTable:
    """token -> d-dimensional float32 vector, with a cased-fallback lookup.

    resolve() tries the exact form, then the capitalized form, then the
    lowercase form, in that order; pretrained vocabularies (Google News)
    are cased while corpus tokens are lowercase.
    """

    dim: int
    tokens: dict[str, int]
    matrix: np.ndarray
    source: str = "self_trained"
    index_to_token: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.index_to_token:
            ordered = [""] * len(self.tokens)
            for tok, idx in self.tokens.items():
                ordered[idx] = tok
            self.index_to_token = tuple(ordered)

    def __len__(self) -> int:
        return len(self.tokens)

    def resolve(self, token: str):
        """Return (row index, how) or (-1, None); how is the matching form."""
        idx = self.tokens.get(token)
        if idx is not None:
            return idx, "exact"
        cap = token.capitalize()
        if cap != token:
            idx = self.tokens.get(cap)
            if idx is not None:
                return idx, "capitalized"
        low = token.lower()
        if low != token:
            idx = self.tokens.get(low)
            if idx is not None:
                return idx, "lower"
        return -1, None

    def __contains__(self, token: str) -> bool:
        return self.resolve(token)[0] >= 0

    def vector(self, token: str) -> np.ndarray:
        idx, _ = self.resolve(token)
        if idx < 0:
            raise KeyError(token)
        return self.matrix[idx]


def l2_normalized(table: EmbeddingTable) -> EmbeddingTable:
    """A copy of the table with unit-norm rows (zero rows stay zero)."""
    norms = np.linalg.norm(table.matrix.astype(np.float64), axis=1)
    scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    matrix = (table.matrix.astype(np.float64) * scale[:, None]).astype(np.float32)
    return EmbeddingTable(
        dim=table.dim,
        tokens=dict(table.tokens),
        matrix=matrix,
        source=table.source,
        index_to_token=table.index_to_token,
    )


@njit(cache=True)
def _sgns_kernel(stream, offsets, syn0, syn1, cum_table, window, negatives, epochs, lr0, seed):
    next_random = np.uint64(seed)
    mul = np.uint64(25214903917)
    inc = np.uint64(11)
    domain = np.uint64(cum_table[-1])
    uwindow = np.uint64(window)
    dim = syn0.shape[1]
    table_size = cum_table.shape[0]
    total = float(stream.shape[0]) * epochs
    neu1e = np.empty(dim, dtype=np.float64)
    processed = 0.0
    n_sent = offsets.shape[0] - 1

    for _ in range(epochs):
        for s in range(n_sent):
            start = offsets[s]
            end = offsets[s + 1]
            for pos in range(start, end):
                w = stream[pos]
                alpha = lr0 * (1.0 - processed / (total + 1.0))
                if alpha < lr0 * 1e-4:
                    alpha = lr0 * 1e-4
                processed += 1.0
                next_random = next_random * mul + inc
                b = np.int64(next_random % uwindow)
                radius = window - b
                lo = pos - radius
                hi = pos + radius
                if lo < start:
                    lo = start
                if hi > end - 1:
                    hi = end - 1
                for c in range(lo, hi + 1):
                    if c == pos:
                        continue
                    u = stream[c]
                    for i in range(dim):
                        neu1e[i] = 0.0
                    for d_i in range(negatives + 1):
                        if d_i == 0:
                            target = w
                            label = 1.0
                        else:
                            next_random = next_random * mul + inc
                            r = np.int64((next_random >> np.uint64(16)) % domain)
                            lo_b = 0
                            hi_b = table_size
                            while lo_b < hi_b:
                                mid = (lo_b + hi_b) // 2
                                if cum_table[mid] <= r:
                                    lo_b = mid + 1
                                else:
                                    hi_b = mid
                            target = lo_b
                            if target == w:
                                continue
                            label = 0.0
                        f = 0.0
                        for i in range(dim):
                            f += syn0[u, i] * syn1[target, i]
                        if f > 6.0:
                            g = (label - 1.0) * alpha
                        elif f < -6.0:
                            g = label * alpha
                        else:
                            g = (label - 1.0 / (1.0 + np.exp(-f))) * alpha
                        for i in range(dim):
                            neu1e[i] += g * syn1[target, i]
                        for i in range(dim):
                            syn1[target, i] += g * syn0[u, i]
                    for i in range(dim):
                        syn0[u, i] += neu1e[i]


def _as_token_lists(stories) -> list[list[str]]:
    lists = []
    for story in stories:
        tokens = getattr(story, "tokens", story)
        lists.append(list(tokens))
    return lists


class SkipgramTrainer(BaseEstimator):
    """Sklearn-style wrapper around the skip-gram kernel.

    fit(X) accepts a sequence of token lists (or TokenizedStory objects);
    the trained vectors land in `table_`.
    """

    def __init__(self, dim=50, window=5, min_count=5, negatives=5, epochs=15,
                 learning_rate=0.025, seed=1):
        self.dim = dim
        self.window = window
        self.min_count = min_count
        self.negatives = negatives
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.seed = seed

    def _validate(self):
        for name in ("dim", "window", "min_count", "negatives", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")

    def fit(self, X, y=None):
        self._validate()
        token_lists = _as_token_lists(X)
        if not token_lists or all(len(t) == 0 for t in token_lists):
            raise EmptyCorpusError("no tokens to train on")
        counts = Counter()
        for tokens in token_lists:
            counts.update(tokens)
        kept = [(t, c) for t, c in counts.items() if c >= self.min_count]
        if not kept:
            raise NoTokenMeetsMinCountError(
                f"no token occurs at least {self.min_count} times"
            )
        kept.sort(key=lambda tc: (-tc[1], tc[0]))
        vocab = {t: i for i, (t, _) in enumerate(kept)}
        freq = np.array([c for _, c in kept], dtype=np.float64)

        # Negative-sampling table: cumulative unigram^0.75 scaled to an
        # integer domain, sampled by binary search in the kernel.
        weights = freq**_UNIGRAM_POWER
        cum = np.cumsum(weights)
        cum_table = np.rint(cum / cum[-1] * _NEG_TABLE_DOMAIN).astype(np.int64)
        cum_table[-1] = _NEG_TABLE_DOMAIN

        stream, offsets = [], [0]
        for tokens in token_lists:
            ids = [vocab[t] for t in tokens if t in vocab]
            stream.extend(ids)
            offsets.append(len(stream))
        stream = np.asarray(stream, dtype=np.int64)
        offsets = np.asarray(offsets, dtype=np.int64)

        rng = np.random.default_rng(self.seed)
        syn0 = ((rng.random((len(vocab), self.dim)) - 0.5) / self.dim).astype(np.float32)
        syn1 = np.zeros((len(vocab), self.dim), dtype=np.float32)
        if stream.size:
            _sgns_kernel(
                stream,
                offsets,
                syn0,
                syn1,
                cum_table,
                int(self.window),
                int(self.negatives),
                int(self.epochs),
                float(self.learning_rate),
                int(self.seed),
            )
        self.table_ = EmbeddingTable(
            dim=self.dim, tokens=vocab, matrix=syn0, source="self_trained"
        )
        return self


def train_skipgram(stories, **params) -> EmbeddingTable:
    """Train skip-gram vectors over tokenized stories; see SkipgramTrainer."""
    return SkipgramTrainer(**params).fit(stories).table_


# --- word2vec binary format -------------------------------------------------

def save_word2vec_binary(table: EmbeddingTable, path: str | Path) -> None:
    """Write the table in word2vec binary format (bit-exact round trip)."""
    matrix = np.ascontiguousarray(table.matrix, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(f"{len(table.tokens)} {table.dim}\n".encode("utf-8"))
        for idx, token in enumerate(table.index_to_token):
            if " " in token or "\n" in token:
                raise ValueError(f"token {token!r} contains a delimiter byte")
            fh.write(token.encode("utf-8") + b" ")
            fh.write(matrix[idx].tobytes())
            fh.write(b"\n")


def _read_token(fh: io.BufferedReader) -> bytes | None:
    buf = bytearray()
    while True:
        ch = fh.read(1)
        if not ch:
            return None
        if ch == b" ":
            return bytes(buf)
        buf += ch


def load_word2vec_binary(path: str | Path, on_invalid_utf8="replace") -> EmbeddingTable:
    """Read a word2vec binary file into an EmbeddingTable (source='pretrained').

    on_invalid_utf8 is "replace" (decode with replacement characters) or
    "skip" (drop the record but still advance through the file).
    """
    if on_invalid_utf8 not in ("replace", "skip"):
        raise ValueError("on_invalid_utf8 must be 'replace' or 'skip'")
    with open(path, "rb") as raw:
        fh = io.BufferedReader(raw, buffer_size=1 << 20)
        header = fh.readline(128)
        parts = header.split()
        if len(parts) != 2 or not header.endswith(b"\n"):
            raise MalformedHeaderError(f"bad word2vec header: {header!r}")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise MalformedHeaderError(f"bad word2vec header: {header!r}") from None
        if count < 0 or dim < 1:
            raise MalformedHeaderError(f"bad word2vec header values: {header!r}")
        vec_bytes = 4 * dim
        tokens: dict[str, int] = {}
        rows: list[bytes] = []
        for _ in range(count):
            raw_token = _read_token(fh)
            if raw_token is None:
                raise TruncatedFileError("file ended while reading a token")
            data = fh.read(vec_bytes)
            if len(data) != vec_bytes:
                raise TruncatedFileError("file ended inside a vector record")
            nxt = fh.peek(1)[:1]
            if nxt == b"\n":
                fh.read(1)
            try:
                token = raw_token.decode("utf-8")
            except UnicodeDecodeError:
                if on_invalid_utf8 == "skip":
                    continue
                token = raw_token.decode("utf-8", errors="replace")
            if token in tokens:
                continue
            tokens[token] = len(rows)
            rows.append(data)
    matrix = (
        np.frombuffer(b"".join(rows), dtype="<f4").reshape(len(rows), dim)
        if rows
        else np.zeros((0, dim), dtype=np.float32)
    )
    return EmbeddingTable(dim=dim, tokens=tokens, matrix=matrix.copy(), source="pretrained")


# --- coverage ----------------------------------------------------------------

@dataclass(frozen=True)
class CoverageReport:
    """How much of a vocabulary/corpus an embedding table can represent."""

    token_coverage: float
    affected_story_fraction: float
    dropped_per_story: np.ndarray
    embeddable_tokens: int
    matched_how: dict[str, int]


def coverage_report(stories, vocab, table: EmbeddingTable) -> CoverageReport:
    """Fraction of vocab tokens embeddable and of stories losing >= 1 token."""
    matched_how = {"exact": 0, "capitalized": 0, "lower": 0}
    embeddable = set()
    for token in vocab.token_to_index:
        idx, how = table.resolve(token)
        if idx >= 0:
            embeddable.add(token)
            matched_how[how] += 1
    token_coverage = len(embeddable) / vocab.V if vocab.V else 1.0
    dropped = np.zeros(len(stories), dtype=np.int64)
    for i, story in enumerate(stories):
        tokens = getattr(story, "tokens", story)
        dropped[i] = sum(1 for t in tokens if t not in embeddable)
    affected = float(np.mean(dropped > 0)) if len(stories) else 0.0
    return CoverageReport(
        token_coverage=token_coverage,
        affected_story_fraction=affected,
        dropped_per_story=dropped,
        embeddable_tokens=len(embeddable),
        matched_how=matched_how,
    )
