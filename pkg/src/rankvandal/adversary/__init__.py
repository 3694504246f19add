"""Adversary-side machinery: substitute models distilled from the victim's
public API, the four attack losses, min-norm multi-task weighting, the joint
training loop, and the end-to-end attack.

Nothing in this package may import victim internals; the only coupling is the
facade in rankvandal.target.api (checked structurally by the test suite).
"""

from .attack import (
    AttackOutcome,
    Revision,
    attack,
    load_revision_log,
    random_attack,
    sample_targets,
    save_revision_log,
)
from .losses import consistency_loss, detect_loss, rank_loss, topic_loss
from .mgda import MgdaWeights, TaskGradients, mgda_weights, min_norm_weights
from .ranker import RankerConfig, SubstituteRanker, distill_ranker, load_ranker, save_ranker
from .subdetector import (
    DetectorConfig,
    SubstituteDetector,
    load_subdetector,
    save_subdetector,
    train_substitute_detector,
)
from .training import TrainingReport, train_retrieval

__all__ = [
    "AttackOutcome",
    "DetectorConfig",
    "MgdaWeights",
    "RankerConfig",
    "Revision",
    "SubstituteDetector",
    "SubstituteRanker",
    "TaskGradients",
    "TrainingReport",
    "attack",
    "consistency_loss",
    "detect_loss",
    "distill_ranker",
    "load_ranker",
    "load_revision_log",
    "load_subdetector",
    "mgda_weights",
    "min_norm_weights",
    "random_attack",
    "rank_loss",
    "sample_targets",
    "save_ranker",
    "save_revision_log",
    "save_subdetector",
    "topic_loss",
    "train_retrieval",
    "train_substitute_detector",
]
