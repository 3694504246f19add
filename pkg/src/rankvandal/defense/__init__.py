"""Countermeasures: coherence-based revision flagging, adversarial retraining."""

from .coherence import (
    CoherenceTriplet,
    EntityGrid,
    SentenceChunk,
    build_triplets,
    entity_grid,
    extract_chunk,
    load_triplets,
    save_triplets,
    triplets_from_revision,
)
from .model import (
    CoherenceConfig,
    CoherenceModel,
    CoherenceReport,
    coherence_score,
    detect_revision,
    joint_scores,
    load_coherence,
    ranking_loss,
    save_coherence,
    train_coherence,
)
from .retrain import adversarial_retrain

__all__ = [
    "CoherenceConfig",
    "CoherenceModel",
    "CoherenceReport",
    "CoherenceTriplet",
    "EntityGrid",
    "SentenceChunk",
    "adversarial_retrain",
    "build_triplets",
    "coherence_score",
    "detect_revision",
    "entity_grid",
    "extract_chunk",
    "joint_scores",
    "load_coherence",
    "load_triplets",
    "ranking_loss",
    "save_coherence",
    "save_triplets",
    "train_coherence",
    "triplets_from_revision",
]
