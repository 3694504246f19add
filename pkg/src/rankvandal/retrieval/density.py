"""Word-level match density between a query and a paragraph.

For every query word the paragraph is scanned for the best-matching encoded
word vectors: the top cosine and the mean of the top-k cosines are averaged,
and the per-word scores are summed. Cosines are floored at zero so the score
stays non-negative and unmatched words contribute nothing.
"""

import numpy as np
import torch

from ..corpus import Paragraph
from ..embeddings import WordVectorTable
from ..errors import ContractError
from ..nnutil import cos_t, kmax_mean


def word_density_core(q_vecs: torch.Tensor, p_vecs: torch.Tensor, k: int) -> torch.Tensor:
    """Density from encoded word matrices, shapes (m, d) and (n, d).

    Per query word: (s_max + mean of top-k cosines) / 2, cosines clamped to
    [0, 1]; result is the sum over query words. Differentiable.
    """
    if q_vecs.ndim != 2 or p_vecs.ndim != 2:
        raise ContractError("word matrices must be 2-d")
    if q_vecs.shape[0] == 0 or p_vecs.shape[0] == 0:
        raise ContractError("word density needs non-empty token lists")
    # (m, n) cosine grid, negatives floored
    cos = cos_t(q_vecs[:, None, :], p_vecs[None, :, :])
    cos = torch.clamp(cos, min=0.0)
    s_max = cos.max(dim=1).values
    s_kmax = kmax_mean(cos, k, dim=1)
    return ((s_max + s_kmax) / 2).sum()


def density_score_matrix(
    query_tokens: list[str], paragraph_tokens: list[str], table: WordVectorTable, k: int
) -> float:
    """Raw-vector density (no trained encoders); the screening score."""
    if not query_tokens or not paragraph_tokens:
        raise ContractError("word density needs non-empty token lists")
    q = table.embed_tokens(query_tokens)
    p = table.embed_tokens(paragraph_tokens)
    # all table vectors are nonzero so plain normalization is safe
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    p = p / np.linalg.norm(p, axis=1, keepdims=True)
    cos = np.clip(q @ p.T, 0.0, None)
    s_max = cos.max(axis=1)
    kk = min(k, cos.shape[1])
    topk = np.sort(cos, axis=1)[:, -kk:]
    s_kmax = topk.mean(axis=1)
    return float(((s_max + s_kmax) / 2).sum())


def prefilter_pool(
    query_tokens: list[str],
    pool: list[Paragraph],
    table: WordVectorTable,
    k: int,
    cap: int,
) -> list[Paragraph]:
    """Top-`cap` pool paragraphs by screening density, stable order on ties.

    Keeps the per-instance candidate set small enough for the towers; uses
    only the adversary's own word table, nothing from the victim.
    """
    if cap < 1:
        raise ContractError("cap must be >= 1")
    if len(pool) <= cap:
        return list(pool)
    scores = []
    for i, para in enumerate(pool):
        s = (
            density_score_matrix(query_tokens, list(para.tokens), table, k)
            if para.tokens
            else -1.0
        )
        scores.append((-s, i))
    keep = sorted(scores)[:cap]
    return [pool[i] for _, i in sorted(keep, key=lambda t: t[1])]
