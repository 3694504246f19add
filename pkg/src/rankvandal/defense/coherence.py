"""Sentence chunks, coherence triplets, and the entity grid.

The chunk is the unit the coherence detector reasons over: the first or
last two sentences of a paragraph. Triplets pair a chunk with its true
neighbor and a foreign impostor for ranking-loss training.
"""

import json
import random
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

from ..corpus import Article, Corpus, Paragraph, split_sentences, tokenize, tokenize_with_spans
from ..errors import ContractError, ParseError

ROLE_SUBJECT, ROLE_OBJECT, ROLE_OTHER, ROLE_ABSENT = 0, 1, 2, 3
N_ROLES = 4


@dataclass(frozen=True)
class SentenceChunk:
    """Exactly the first or last 1-2 sentences of a paragraph."""

    text: str
    origin: str  # "first" | "last"

    def __post_init__(self) -> None:
        if self.origin not in ("first", "last"):
            raise ContractError(f"unknown chunk origin {self.origin!r}")
        if not (1 <= len(split_sentences(self.text)) <= 2):
            raise ContractError("chunk must hold one or two sentences")


def _sentence_spans(text: str, sentences: tuple[str, ...]) -> list[tuple[int, int]]:
    """Character spans of the sentences, located left to right so repeated
    sentence text resolves to the right occurrence."""
    spans = []
    pos = 0
    for s in sentences:
        i = text.index(s, pos)
        spans.append((i, i + len(s)))
        pos = i + len(s)
    return spans


def extract_chunk(p: Paragraph, which: str) -> SentenceChunk:
    """Slice the designated sentences out of the paragraph text, so a
    first-chunk is literally a prefix of it."""
    if which not in ("first", "last"):
        raise ContractError(f"unknown chunk origin {which!r}")
    spans = _sentence_spans(p.text, p.sentences)
    pair = spans[:2] if which == "first" else spans[-2:]
    return SentenceChunk(text=p.text[pair[0][0] : pair[-1][1]], origin=which)


@dataclass(frozen=True)
class CoherenceTriplet:
    """Anchor chunk, its true neighbor, and a disordered alternative."""

    s_i: SentenceChunk
    s_next: SentenceChunk
    s_neg: SentenceChunk
    pos_article_id: str = ""
    neg_article_id: str = ""

    def __post_init__(self) -> None:
        if self.s_next.text == self.s_neg.text:
            raise ContractError("positive and negative chunks must differ")


def build_triplets(corpus: Corpus, n: int, seed: int) -> list[CoherenceTriplet]:
    """Training triplets: the last chunk of a paragraph anchors its article's
    true follower against the first chunk of a foreign paragraph."""
    articles = sorted(corpus.articles)
    if len(articles) < 2:
        raise ContractError("need at least two articles to draw negatives")
    rng = random.Random(f"{seed}:triplets")
    out: list[CoherenceTriplet] = []
    while len(out) < n:
        aid = rng.choice(articles)
        article = corpus.articles[aid]
        j = rng.randrange(len(article.paragraphs) - 1)
        nid = rng.choice(articles)
        if nid == aid:
            continue
        neg_para = rng.choice(corpus.articles[nid].paragraphs)
        s_next = extract_chunk(article.paragraphs[j + 1], "first")
        s_neg = extract_chunk(neg_para, "first")
        if s_next.text == s_neg.text:
            continue
        out.append(
            CoherenceTriplet(
                s_i=extract_chunk(article.paragraphs[j], "last"),
                s_next=s_next,
                s_neg=s_neg,
                pos_article_id=aid,
                neg_article_id=nid,
            )
        )
    return out


def triplets_from_revision(before: Article, inserted: Paragraph, index: int) -> list[CoherenceTriplet]:
    """Two test triplets, one per insertion joint.

    index is the gap position: inserted sits between paragraphs index and
    index+1 of the original article."""
    if not (0 <= index < len(before.paragraphs) - 1):
        raise ContractError(
            f"joint index {index} out of range for {len(before.paragraphs)} paragraphs"
        )
    upper = before.paragraphs[index]
    lower = before.paragraphs[index + 1]
    return [
        CoherenceTriplet(
            s_i=extract_chunk(upper, "last"),
            s_next=extract_chunk(lower, "first"),
            s_neg=extract_chunk(inserted, "first"),
            pos_article_id=before.id,
            neg_article_id=inserted.source_id or "",
        ),
        CoherenceTriplet(
            s_i=extract_chunk(lower, "first"),
            s_next=extract_chunk(upper, "last"),
            s_neg=extract_chunk(inserted, "last"),
            pos_article_id=before.id,
            neg_article_id=inserted.source_id or "",
        ),
    ]


def save_triplets(triplets: list[CoherenceTriplet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in triplets:
            fh.write(json.dumps(asdict(t), sort_keys=True) + "\n")


def load_triplets(path: str | Path) -> list[CoherenceTriplet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(
                    CoherenceTriplet(
                        s_i=SentenceChunk(**rec["s_i"]),
                        s_next=SentenceChunk(**rec["s_next"]),
                        s_neg=SentenceChunk(**rec["s_neg"]),
                        pos_article_id=rec["pos_article_id"],
                        neg_article_id=rec["neg_article_id"],
                    )
                )
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ParseError(f"bad triplet line {lineno}: {exc}") from exc
    return out


@lru_cache(maxsize=None)
def _words(name: str) -> frozenset[str]:
    path = Path(__file__).parent.parent / "data" / name
    return frozenset(
        ln.strip().lower() for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()
    )


@dataclass(frozen=True)
class EntityGrid:
    """Role transitions of shared entities across a chunk pair.

    transitions is the flattened 4x4 bigram count (role in chunk A times
    role in chunk B); its entries total the entity count."""

    entities: tuple[str, ...]
    roles: tuple[tuple[int, int], ...]
    transitions: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.roles) != len(self.entities):
            raise ContractError("one role pair per entity required")
        if len(self.transitions) != N_ROLES * N_ROLES:
            raise ContractError("transition vector must have 16 entries")
        if any(t < 0 for t in self.transitions):
            raise ContractError("transition counts must be non-negative")
        if sum(self.transitions) != len(self.entities):
            raise ContractError("transition counts must sum to the entity count")


def _chunk_entities(text: str) -> list[str]:
    """Noun-like tokens: capitalized mid-sentence tokens plus content words."""
    stop = _words("stopwords.txt")
    found: list[str] = []
    for sent in split_sentences(text):
        for pos, (tok, _, _) in enumerate(tokenize_with_spans(sent)):
            low = tok.lower()
            mid_cap = pos > 0 and tok[0].isalpha() and tok[0].isupper()
            content = low not in stop and len(low) >= 4 and low[0].isalpha()
            if (mid_cap or content) and low not in found:
                found.append(low)
    return found


def _chunk_role(tokens: list[str], entity: str) -> int:
    if entity not in tokens:
        return ROLE_ABSENT
    verbs = _words("verbs.txt")
    verb_at = next((i for i, t in enumerate(tokens) if t in verbs), None)
    if verb_at is None:
        return ROLE_OTHER
    return ROLE_SUBJECT if tokens.index(entity) < verb_at else ROLE_OBJECT


def entity_grid(a: SentenceChunk, b: SentenceChunk) -> EntityGrid:
    entities: list[str] = []
    for e in _chunk_entities(a.text) + _chunk_entities(b.text):
        if e not in entities:
            entities.append(e)
    toks_a, toks_b = tokenize(a.text), tokenize(b.text)
    roles = tuple((_chunk_role(toks_a, e), _chunk_role(toks_b, e)) for e in entities)
    counts = [0] * (N_ROLES * N_ROLES)
    for ra, rb in roles:
        counts[ra * N_ROLES + rb] += 1
    return EntityGrid(entities=tuple(entities), roles=roles, transitions=tuple(counts))
