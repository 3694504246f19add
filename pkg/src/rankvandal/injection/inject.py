"""Promotional-content injection at a tagged position.

Given per-token revision-entity tags, pick one eligible span with a seeded
uniform draw and either replace it with the business name or append the
adverb phrase "in <business name>" right after it.
"""

import random

from ..corpus import Paragraph, tokenize_with_spans
from ..errors import ContractError, InfeasibleError
from .labels import InjectionInputs, RevisionEntity, TagSequence

INSERTION_TEMPLATE = "in {promo}"


def _revised_text(text: str, spans, start: int, end: int, label, promo: str) -> str:
    if label is RevisionEntity.REPLACEMENT:
        lo = spans[start][1]
        hi = spans[end - 1][2]
        return text[:lo] + promo + text[hi:]
    hi = spans[end - 1][2]
    phrase = INSERTION_TEMPLATE.format(promo=promo)
    return text[:hi] + " " + phrase + text[hi:]


def inject(inputs: InjectionInputs, tags: TagSequence, seed: int | str = 0) -> Paragraph:
    """Build the candidate promotion paragraph.

    Eligible spans are filtered to those whose rewrite adds exactly one
    verbatim occurrence of the promotional content (a replacement of a span
    that already contains the business name would leave the count flat)."""
    text = inputs.raw_paragraph.text
    spans = tokenize_with_spans(text)
    if len(tags) != len(spans):
        raise ContractError("tag sequence length does not match token count")

    promo = inputs.promotional_content.strip()
    before = text.count(promo)
    candidates = []
    for start, end, label in tags.spans():
        revised = _revised_text(text, spans, start, end, label, promo)
        if revised.count(promo) == before + 1:
            candidates.append((start, end, label, revised))
    if not candidates:
        raise InfeasibleError("no eligible injection position in paragraph")

    rng = random.Random(f"{seed}:inject-span")
    start, end, label, revised = candidates[rng.randrange(len(candidates))]
    return Paragraph.from_text(revised, source_id=inputs.raw_paragraph.source_id)
