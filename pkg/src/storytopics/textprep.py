"""Text preprocessing: cleaning, tokenization, stopword and template-word removal.

The cleaning convention is deletion-based: every character that is not an
ASCII letter is deleted (whitespace runs collapse to a single space), so
"A/C" becomes "ac" and "don't" becomes "dont". The bundled stopword list
follows the same convention. Template words are the eight boilerplate
tokens every story shares: as, smart, home, owner, i, want, be, able.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Corpus

TEMPLATE_WORDS = frozenset(["as", "smart", "home", "owner", "i", "want", "be", "able"])

_NON_LETTER = re.compile(r"[^a-z\s]+")
_WS_RUN = re.compile(r"\s+")


def clean_text(raw: str) -> str:
    """Lowercase, delete non-letter characters, collapse whitespace runs."""
    lowered = raw.lower()
    letters_only = _NON_LETTER.sub("", lowered)
    return _WS_RUN.sub(" ", letters_only).strip()


def tokenize(cleaned: str) -> list[str]:
    """Split cleaned text on whitespace; never yields empty tokens."""
    return cleaned.split()


def remove_stopwords(tokens, stopwords, template_words=TEMPLATE_WORDS) -> list[str]:
    """Order-preserving removal of every token in stopwords or template_words."""
    drop = set(stopwords) | set(template_words)
    return [t for t in tokens if t not in drop]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a stopword file (one token per line, '#' comments) or the bundled list."""
    if path is None:
        text = (
            resources.files("storytopics")
            .joinpath("data/stopwords_en.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        word = line.split("#", 1)[0].strip()
        if word:
            words.add(word)
    return frozenset(words)


def bundled_stopwords_text() -> str:
    """Raw bytes-as-text of the bundled list (used for cache keys)."""
    return (
        resources.files("storytopics")
        .joinpath("data/stopwords_en.txt")
        .read_text(encoding="utf-8")
    )


@dataclass(frozen=True)
class TokenizedStory:
    """A story reduced to its surviving lowercase alphabetic tokens."""

    story_id: str
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class Vocabulary:
    """Dense token index with per-token document and corpus frequencies.

    Indices are assigned in sorted token order, so the index depends only
    on the token set, not on story order.
    """

    token_to_index: dict[str, int]
    doc_freq: np.ndarray
    corpus_freq: np.ndarray
    index_to_token: tuple[str, ...]

    @property
    def V(self) -> int:
        return len(self.index_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def __len__(self) -> int:
        return self.V


def build_vocabulary(token_lists) -> Vocabulary:
    """Vocabulary over a sequence of token lists (dense, sorted index)."""
    doc_counter: Counter = Counter()
    corpus_counter: Counter = Counter()
    for tokens in token_lists:
        corpus_counter.update(tokens)
        doc_counter.update(set(tokens))
    ordered = tuple(sorted(corpus_counter))
    token_to_index = {t: i for i, t in enumerate(ordered)}
    doc_freq = np.array([doc_counter[t] for t in ordered], dtype=np.int64)
    corpus_freq = np.array([corpus_counter[t] for t in ordered], dtype=np.int64)
    return Vocabulary(token_to_index, doc_freq, corpus_freq, ordered)


def preprocess_story(text: str, stopwords, template_words=TEMPLATE_WORDS) -> list[str]:
    return remove_stopwords(tokenize(clean_text(text)), stopwords, template_words)


def preprocess_corpus(
    corpus: Corpus,
    stopwords=None,
    template_words=TEMPLATE_WORDS,
):
    """Run the full pipeline over a corpus.

    Returns (stories, vocab_before_removal, vocab_after_removal). Both
    vocabularies are reported so the unique-token checkpoints before and
    after stopword/template removal stay observable. Stories whose token
    list becomes empty are kept, with empty tokens, to preserve index
    alignment with downstream matrices.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    raw_token_lists = [tokenize(clean_text(s.full_text)) for s in corpus]
    vocab_before = build_vocabulary(raw_token_lists)
    filtered = [remove_stopwords(toks, stopwords, template_words) for toks in raw_token_lists]
    vocab_after = build_vocabulary(filtered)
    stories = [
        TokenizedStory(story_id=str(s.id), tokens=tuple(toks))
        for s, toks in zip(corpus, filtered)
    ]
    return stories, vocab_before, vocab_after
