"""Twin-tower passage retrieval: picks the promotion paragraph and where to
insert it.

One tower scores query relevance (semantic similarity scaled by word-level
match density), the other scores article fit. Their softmaxed outputs are
added; the argmax candidate wins at inference and a soft top-k mixture of
candidates stands in for it during training.
"""

from .density import density_score_matrix, prefilter_pool, word_density_core
from .network import (
    InsertionChoice,
    RetrievalConfig,
    RetrievalNetwork,
    RetrievalOutput,
    load_retrieval,
    save_retrieval,
)

__all__ = [
    "InsertionChoice",
    "RetrievalConfig",
    "RetrievalNetwork",
    "RetrievalOutput",
    "density_score_matrix",
    "load_retrieval",
    "prefilter_pool",
    "save_retrieval",
    "word_density_core",
]
