"""Shared evaluation arithmetic: NDCG with log2 discounting and plain MSE.

Gains are raw scores, not exponentiated relevance grades.
"""

import math

import numpy as np

from .errors import ContractError


def dcg_at_k(gains: list[float], k: int) -> float:
    return sum(g / math.log2(i + 2) for i, g in enumerate(gains[:k]))


def ndcg_at_k(predicted_scores: list[float], true_scores: list[float], k: int) -> float:
    """NDCG of the ordering induced by predicted_scores, gains = true_scores.

    1.0 when every true score is zero (nothing to misorder).
    """
    if len(predicted_scores) != len(true_scores):
        raise ContractError("score lists must align")
    if not predicted_scores:
        raise ContractError("empty ranking")
    order = np.argsort(-np.asarray(predicted_scores), kind="stable")
    ranked_gains = [true_scores[i] for i in order]
    ideal_gains = sorted(true_scores, reverse=True)
    ideal = dcg_at_k(ideal_gains, k)
    if ideal == 0.0:
        return 1.0
    return dcg_at_k(ranked_gains, k) / ideal


def mse(predicted: list[float], true: list[float]) -> float:
    if len(predicted) != len(true) or not predicted:
        raise ContractError("score lists must align and be non-empty")
    diff = np.asarray(predicted) - np.asarray(true)
    return float(np.mean(diff * diff))
