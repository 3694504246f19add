"""Promotional incentive injection: entity labeling, tagging, rewriting."""

from .inject import INSERTION_TEMPLATE, inject
from .labels import (
    LABELS,
    MAX_PROMO_TOKENS,
    InjectionInputs,
    RevisionEntity,
    TagSequence,
    heuristic_label,
)
from .tagger import (
    TaggerConfig,
    TaggerModel,
    TaggerReport,
    load_tagger,
    save_tagger,
    tag,
    train_tagger,
)

__all__ = [
    "INSERTION_TEMPLATE",
    "LABELS",
    "MAX_PROMO_TOKENS",
    "InjectionInputs",
    "RevisionEntity",
    "TagSequence",
    "TaggerConfig",
    "TaggerModel",
    "TaggerReport",
    "heuristic_label",
    "inject",
    "load_tagger",
    "save_tagger",
    "tag",
    "train_tagger",
]
