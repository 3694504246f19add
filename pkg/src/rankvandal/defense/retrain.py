"""Adversarial retraining of the wiki's gradient-boosted detector."""

import numpy as np

from ..errors import ContractError
from ..target.detector import TargetDetector, train_target_detector


def adversarial_retrain(
    base_labeled: list[tuple[np.ndarray, bool]],
    revision_rows: list[np.ndarray],
    seed: int = 0,
    threshold: float = 0.5,
) -> TargetDetector:
    """Refit the detector with attack revisions folded in as damaging rows.

    revision_rows must come from a query split disjoint from the one used
    to evaluate the retrained model; the caller owns that split."""
    if not revision_rows:
        raise ContractError("adversarial retraining needs at least one revision row")
    augmented = list(base_labeled) + [(np.asarray(r, dtype=np.float64), True) for r in revision_rows]
    return train_target_detector(augmented, seed=seed, threshold=threshold)
