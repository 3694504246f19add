"""Revision-entity labels and the heuristic labeler.

REPLACEMENT marks spans that can be swapped wholesale for a business name
(organization names, geographic modifiers), INSERTION marks single tokens a
promotional adverb phrase can follow (promo verbs and target-query terms),
and everything else is UNSUITABILITY.
"""

import enum
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from ..corpus import Paragraph, tokenize, tokenize_with_spans
from ..errors import ContractError

MAX_PROMO_TOKENS = 8


class RevisionEntity(enum.Enum):
    REPLACEMENT = "replacement"
    INSERTION = "insertion"
    UNSUITABILITY = "unsuitability"


# fixed label indexing shared by the tagger and its checkpoints
LABELS = (RevisionEntity.REPLACEMENT, RevisionEntity.INSERTION, RevisionEntity.UNSUITABILITY)
LABEL_INDEX = {label: i for i, label in enumerate(LABELS)}


@dataclass(frozen=True)
class TagSequence:
    """Per-token labels aligned with a paragraph's tokens."""

    labels: tuple[RevisionEntity, ...]

    def __len__(self) -> int:
        return len(self.labels)

    def spans(self) -> list[tuple[int, int, RevisionEntity]]:
        """Eligible units: each contiguous REPLACEMENT run is one span
        [start, end); each INSERTION token is its own single-token span."""
        out = []
        i = 0
        n = len(self.labels)
        while i < n:
            label = self.labels[i]
            if label is RevisionEntity.REPLACEMENT:
                j = i
                while j < n and self.labels[j] is RevisionEntity.REPLACEMENT:
                    j += 1
                out.append((i, j, label))
                i = j
            elif label is RevisionEntity.INSERTION:
                out.append((i, i + 1, label))
                i += 1
            else:
                i += 1
        return out


@dataclass(frozen=True)
class InjectionInputs:
    raw_paragraph: Paragraph
    promotional_content: str
    target_query: str

    def __post_init__(self) -> None:
        n = len(tokenize(self.promotional_content))
        if n == 0:
            raise ContractError("promotional content must be non-empty")
        if n > MAX_PROMO_TOKENS:
            raise ContractError(f"promotional content exceeds {MAX_PROMO_TOKENS} tokens")


@lru_cache(maxsize=None)
def _lexicon(name: str) -> tuple[str, ...]:
    path = Path(__file__).parent.parent / "data" / name
    return tuple(
        ln.strip() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()
    )


def promo_keywords() -> frozenset[str]:
    return frozenset(w.lower() for w in _lexicon("promo_keywords.txt"))


def org_suffixes() -> frozenset[str]:
    return frozenset(w.lower() for w in _lexicon("org_suffixes.txt"))


@lru_cache(maxsize=1)
def geolocation_token_seqs() -> tuple[tuple[str, ...], ...]:
    """Gazetteer entries as lowercase token tuples, longest first so greedy
    matching prefers 'United States' over a bare 'United'."""
    seqs = {tuple(tokenize(entry)) for entry in _lexicon("geolocations.txt")}
    return tuple(sorted(seqs, key=lambda s: (-len(s), s)))


def _is_capitalized(token: str) -> bool:
    return token[0].isalpha() and token[0].isupper()


def heuristic_label(inputs: InjectionInputs) -> TagSequence:
    """Gazetteer- and suffix-based silver labels standing in for manual
    annotation. REPLACEMENT wins over INSERTION where both rules fire."""
    cased = [t for t, _, _ in tokenize_with_spans(inputs.raw_paragraph.text)]
    lowered = [t.lower() for t in cased]
    n = len(cased)
    labels = [RevisionEntity.UNSUITABILITY] * n

    # capitalized runs ending in an organization suffix
    suffixes = org_suffixes()
    i = 0
    while i < n:
        if _is_capitalized(cased[i]):
            j = i
            while j < n and _is_capitalized(cased[j]):
                j += 1
            if lowered[j - 1] in suffixes:
                for k in range(i, j):
                    labels[k] = RevisionEntity.REPLACEMENT
            i = j
        else:
            i += 1

    # gazetteer geolocation spans, longest entries first
    for seq in geolocation_token_seqs():
        m = len(seq)
        for start in range(0, n - m + 1):
            if tuple(lowered[start : start + m]) == seq:
                for k in range(start, start + m):
                    labels[k] = RevisionEntity.REPLACEMENT

    # promo verbs and target-query terms; never demote a REPLACEMENT token
    keywords = promo_keywords()
    query_terms = set(tokenize(inputs.target_query))
    for k in range(n):
        if labels[k] is RevisionEntity.UNSUITABILITY and (
            lowered[k] in keywords or lowered[k] in query_terms
        ):
            labels[k] = RevisionEntity.INSERTION

    return TagSequence(labels=tuple(labels))
