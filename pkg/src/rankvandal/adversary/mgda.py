"""Min-norm multi-task weighting over the probability simplex.

Finds w minimizing ||sum_i w_i g_i||^2 with Frank-Wolfe iterations. Away
steps are enabled: plain FW zigzags on solutions interior to a simplex face
and cannot reach the tolerance the tests demand within the iteration cap.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, NumericError

TASKS = ("rank", "detect", "topic", "sem")

_MAX_ITER = 250
_GAP_TOL = 1e-6


@dataclass(frozen=True)
class TaskGradients:
    """Scalar losses plus flattened gradients, one per task, fixed order."""

    losses: dict[str, float]
    grads: dict[str, np.ndarray]

    def __post_init__(self):
        if set(self.losses) != set(TASKS) or set(self.grads) != set(TASKS):
            raise ContractError(f"tasks must be exactly {TASKS}")

    def ordered_grads(self) -> list[np.ndarray]:
        return [self.grads[t] for t in TASKS]


@dataclass(frozen=True)
class MgdaWeights:
    w_rank: float
    w_detect: float
    w_topic: float
    w_sem: float

    def as_array(self) -> np.ndarray:
        return np.array([self.w_rank, self.w_detect, self.w_topic, self.w_sem])


def min_norm_weights(grads: list[np.ndarray]) -> np.ndarray:
    """Weights on the simplex minimizing the squared norm of the blend."""
    if not 2 <= len(grads) <= 4:
        raise ContractError("min-norm weighting takes 2 to 4 gradients")
    flat = []
    for g in grads:
        arr = np.asarray(g, dtype=np.float64).ravel()
        if not np.all(np.isfinite(arr)):
            raise NumericError("non-finite gradient")
        flat.append(arr)
    if len({a.shape for a in flat}) != 1:
        raise ContractError("gradients must share one dimensionality")

    G = np.stack(flat)
    M = G @ G.T
    n = len(flat)
    w = np.full(n, 1.0 / n)
    for _ in range(_MAX_ITER):
        Mw = M @ w
        s = int(np.argmin(Mw))
        gap = 2.0 * float(w @ Mw - Mw[s])
        if gap < _GAP_TOL:
            break
        support = np.flatnonzero(w > 1e-14)
        v = int(support[np.argmax(Mw[support])])
        d_fw = -w.copy()
        d_fw[s] += 1.0
        d_aw = w.copy()
        d_aw[v] -= 1.0
        if float(Mw @ d_fw) <= float(Mw @ d_aw):
            d, gamma_max = d_fw, 1.0
        else:
            wv = w[v]
            d, gamma_max = d_aw, (wv / (1.0 - wv) if wv < 1.0 else 0.0)
        denom = float(d @ M @ d)
        if denom <= 1e-15:
            gamma = min(0.5, gamma_max)  # flat direction: split the segment
        else:
            gamma = min(gamma_max, max(0.0, -float(Mw @ d) / denom))
        if gamma == 0.0:
            break
        w = w + gamma * d
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
    return w


def mgda_weights(task_gradients: TaskGradients) -> MgdaWeights:
    w = min_norm_weights(task_gradients.ordered_grads())
    return MgdaWeights(*(float(x) for x in w))
