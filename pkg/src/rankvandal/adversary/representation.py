"""Parameter-free paragraph representations on the adversary side.

These mirror the retrieval network's candidate representation (sentence
vector stacked on mean word vector) but use raw table vectors, so frozen
discriminators trained on them stay valid while the retrieval encoders move.
"""

import numpy as np

from ..corpus import Article, Paragraph
from ..embeddings import WordVectorTable


def hard_representation(table: WordVectorTable, paragraph: Paragraph) -> np.ndarray:
    """(2d,) stack: unit sentence vector, then mean raw word vector."""
    if not paragraph.tokens:
        return np.zeros(2 * table.dim)
    tokens = list(paragraph.tokens)
    sent = table.embed_token_list(tokens)
    words = table.embed_tokens(tokens).mean(axis=0)
    return np.concatenate([sent, words])


def article_pair_rows(table: WordVectorTable, article: Article, cap: int = 64) -> np.ndarray:
    """(2m, d) matrix: two representation rows per paragraph, first `cap`
    paragraphs."""
    rows = []
    for p in article.paragraphs[:cap]:
        rep = hard_representation(table, p)
        rows.append(rep[: table.dim])
        rows.append(rep[table.dim :])
    return np.stack(rows)
