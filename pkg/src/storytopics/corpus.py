"""Ingest the CrowdRE-style requirements CSV and expose domain labels.

Each row is one crowd-written user story ("As a [role], I want [feature],
so that [benefit].") annotated with one of five application domains. The
domain labels are the reference partition every clustering result is
scored against. Phase-2 rating columns (clarity/usefulness/novelty) are
ignored even when present.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DuplicateIdError, MalformedRowError, MissingColumnError


class DomainLabel(Enum):
    """The five top-level application domains of the dataset."""

    HEALTH = "Health"
    ENERGY = "Energy"
    ENTERTAINMENT = "Entertainment"
    SAFETY = "Safety"
    OTHER = "Other"

    @classmethod
    def parse(cls, raw: str) -> "DomainLabel":
        """Case-insensitive match against the five labels; anything else is OTHER.

        OTHER is the catch-all bucket for user-defined sub-domain strings,
        so unknown values map there instead of raising.
        """
        norm = (raw or "").strip().lower()
        for label in cls:
            if label.value.lower() == norm:
                return label
        return cls.OTHER


# Story text template. The benefit clause is attached with ", so that" and a
# closing period, matching the dataset's own rendering of its entries.
FULL_TEXT_TEMPLATE = "As a {role}, I want {feature}, so that {benefit}."


def make_full_text(role: str, feature: str, benefit: str) -> str:
    return FULL_TEXT_TEMPLATE.format(role=role, feature=feature, benefit=benefit)


@dataclass(frozen=True)
class UserStory:
    """One crowd requirement with its reconstructed sentence."""

    id: int
    role: str
    feature: str
    benefit: str
    domain: DomainLabel
    tags: tuple[str, ...]
    full_text: str


@dataclass(frozen=True)
class Corpus:
    """An ordered, immutable collection of user stories (file order)."""

    stories: tuple[UserStory, ...]
    _index_by_id: dict[int, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self._index_by_id:
            object.__setattr__(
                self, "_index_by_id", {s.id: i for i, s in enumerate(self.stories)}
            )

    @property
    def n(self) -> int:
        return len(self.stories)

    def __len__(self):
        return len(self.stories)

    def __iter__(self):
        return iter(self.stories)

    def __getitem__(self, i):
        return self.stories[i]

    def index_of(self, story_id: int) -> int | None:
        """Row index of a story id, or None if absent."""
        return self._index_by_id.get(story_id)

    def labels(self) -> list[DomainLabel]:
        return [s.domain for s in self.stories]

    def full_texts(self) -> list[str]:
        return [s.full_text for s in self.stories]


@dataclass(frozen=True)
class ColumnMapping:
    """Names of the CSV columns to read. Defaults match the published file."""

    id: str = "id"
    role: str = "role"
    feature: str = "feature"
    benefit: str = "benefit"
    domain: str = "domain"
    tags: str = "tags"

    def required(self) -> tuple[str, ...]:
        # tags are optional: a corpus without them is still usable
        return (self.id, self.role, self.feature, self.benefit, self.domain)


def _split_tags(raw: str) -> tuple[str, ...]:
    # Tags come as a comma list ("Pets, Cats, Dogs"); trim and drop empties.
    return tuple(t.strip() for t in (raw or "").split(",") if t.strip())


def load_corpus(path: str | Path, mapping: ColumnMapping | None = None) -> Corpus:
    """Read a UTF-8, RFC-4180 CSV with a header row into a Corpus.

    One UserStory per data row, full_text reconstructed from the template.
    Raises MissingColumnError, MalformedRowError, or DuplicateIdError.
    """
    mapping = mapping or ColumnMapping()
    stories: list[UserStory] = []
    seen_ids: set[int] = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in mapping.required():
            if col not in header:
                raise MissingColumnError(col)
        has_tags = mapping.tags in header
        for row in reader:
            line_no = reader.line_num
            if any(row.get(col) is None for col in mapping.required()):
                raise MalformedRowError(line_no, "row has fewer fields than the header")
            try:
                story_id = int(row[mapping.id].strip())
            except ValueError:
                raise MalformedRowError(
                    line_no, f"id {row[mapping.id]!r} is not an integer"
                ) from None
            if story_id in seen_ids:
                raise DuplicateIdError(story_id)
            seen_ids.add(story_id)
            role = row[mapping.role].strip()
            feature = row[mapping.feature].strip()
            benefit = row[mapping.benefit].strip()
            stories.append(
                UserStory(
                    id=story_id,
                    role=role,
                    feature=feature,
                    benefit=benefit,
                    domain=DomainLabel.parse(row[mapping.domain]),
                    tags=_split_tags(row[mapping.tags]) if has_tags else (),
                    full_text=make_full_text(role, feature, benefit),
                )
            )
    return Corpus(stories=tuple(stories))


def domain_histogram(corpus: Corpus) -> dict[DomainLabel, int]:
    """Story count per domain; always contains all five labels."""
    counts = {label: 0 for label in DomainLabel}
    for story in corpus:
        counts[story.domain] += 1
    return counts
