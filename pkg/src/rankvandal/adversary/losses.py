"""The four attack losses.

All are torch scalars differentiable w.r.t. the soft candidate representation
(and through it the retrieval parameters). The discriminators are frozen; only
their outputs feed the losses.
"""

import torch

from ..nnutil import as_tensor, cos_t

_CLAMP = 1e-7


def rank_loss(ranker, query: str, article, p_soft: torch.Tensor, insert_index: int) -> torch.Tensor:
    """Negated substitute-ranker score of the article with the soft paragraph
    spliced in at the chosen position."""
    return -ranker.score_with_insertion(query, article, p_soft, insert_index)


def detect_loss(detector, p_soft: torch.Tensor, article) -> torch.Tensor:
    """log d_True - log d_False from the substitute detector; minimizing it
    pushes the insertion toward the benign side."""
    d_true, d_false = detector.probabilities(p_soft, article)
    d_true = torch.clamp(d_true, _CLAMP, 1.0 - _CLAMP)
    d_false = torch.clamp(d_false, _CLAMP, 1.0 - _CLAMP)
    return torch.log(d_true) - torch.log(d_false)


def topic_loss(p_soft: torch.Tensor, topic_repr) -> torch.Tensor:
    """Negative cosine against the article's fixed topic vector."""
    return -cos_t(p_soft, as_tensor(topic_repr))


def consistency_loss(p_soft: torch.Tensor, left_repr, right_repr) -> torch.Tensor:
    """Negative mean cosine against the two paragraphs flanking the insertion."""
    c1 = cos_t(p_soft, as_tensor(left_repr))
    c2 = cos_t(p_soft, as_tensor(right_repr))
    return -(c1 + c2) / 2
