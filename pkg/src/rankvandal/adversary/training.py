"""Joint training of the retrieval network against frozen discriminators.

Each instance runs the full forward path (selector, soft blend, insertion
gaps), computes the four losses, solves for min-norm task weights on the
shared-representation gradients, and descends the weighted sum on retrieval
parameters only.
"""

import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..corpus import Article, Paragraph
from ..errors import TrainingError
from ..nnutil import pin_threads
from ..retrieval import RetrievalNetwork, save_retrieval
from .losses import consistency_loss, detect_loss, rank_loss, topic_loss
from .mgda import TASKS, min_norm_weights
from .representation import hard_representation

Instance = tuple[str, Article, list[Paragraph]]


@dataclass
class TrainingReport:
    """Per-epoch mean loss per task plus the mean min-norm weights."""

    loss_curve: list[dict[str, float]] = field(default_factory=list)
    weight_curve: list[dict[str, float]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"loss_curve": self.loss_curve, "weight_curve": self.weight_curve}


def _instance_losses(net, ranker, detector, query, article, candidates):
    probs = net.probabilities(query, article, candidates)
    k = min(net.config.k_top, len(candidates))
    p_soft = net.soft_representation(candidates, probs, k)
    gaps = net.gap_scores(article, p_soft)
    insert_at = int(np.argmax(gaps.detach().numpy()))
    table = net.table
    topic = hard_representation(table, article.paragraphs[0])
    left = hard_representation(table, article.paragraphs[insert_at])
    right = hard_representation(table, article.paragraphs[insert_at + 1])
    losses = {
        "rank": rank_loss(ranker, query, article, p_soft, insert_at),
        "detect": detect_loss(detector, p_soft, article),
        "topic": topic_loss(p_soft, topic),
        "sem": consistency_loss(p_soft, left, right),
    }
    return losses, p_soft


def _task_gradients(losses, p_soft, params, mode):
    grads = []
    for t in TASKS:
        if mode == "representation":
            (g,) = torch.autograd.grad(losses[t], p_soft, retain_graph=True)
            grads.append(g.detach().numpy().ravel())
        else:
            gs = torch.autograd.grad(
                losses[t], params, retain_graph=True, allow_unused=True
            )
            flat = [
                (g if g is not None else torch.zeros_like(p)).detach().numpy().ravel()
                for g, p in zip(gs, params)
            ]
            grads.append(np.concatenate(flat))
    return grads


def _normalized(grads, normalize):
    if normalize == "none":
        return grads
    # unit-normalizing each task gradient before the min-norm solve stops a
    # single small-magnitude task from absorbing all the weight
    out = []
    for g in grads:
        n = float(np.linalg.norm(g))
        out.append(g / n if n > 1e-12 else g)
    return out


def train_retrieval(
    net: RetrievalNetwork,
    ranker,
    detector,
    instances: list[Instance],
    epochs: int = 2,
    lr: float = 1e-3,
    seed: int = 0,
    mgda_mode: str = "representation",
    normalize: str = "l2",
    divergence_checkpoint: str | Path = "retrieval.diverged.ckpt",
    refresh_discriminators=None,
) -> TrainingReport:
    """Descend the min-norm weighted loss sum; discriminators stay frozen
    unless a refresh callback (the alternating mode) swaps them between
    epochs. Divergence aborts after checkpointing the last finite state."""
    if not instances:
        raise TrainingError("no training instances")
    if mgda_mode not in ("representation", "parameters"):
        raise TrainingError("mgda_mode must be 'representation' or 'parameters'")
    if normalize not in ("l2", "none"):
        raise TrainingError("normalize must be 'l2' or 'none'")
    pin_threads()
    params = [p for p in net.parameters() if p.requires_grad]
    opt = torch.optim.Adam(params, lr=lr)
    order_rng = random.Random(f"{seed}:retrieval-order")
    report = TrainingReport()
    last_good = {k: v.clone() for k, v in net.state_dict().items()}

    order = list(range(len(instances)))
    for _ in range(epochs):
        order_rng.shuffle(order)
        sums = {t: 0.0 for t in TASKS}
        wsums = {t: 0.0 for t in TASKS}
        for i in order:
            query, article, candidates = instances[i]
            losses, p_soft = _instance_losses(
                net, ranker, detector, query, article, candidates
            )
            values = {t: float(losses[t].detach()) for t in TASKS}
            if not all(np.isfinite(v) for v in values.values()):
                net.load_state_dict(last_good)
                save_retrieval(net, divergence_checkpoint)
                raise TrainingError(
                    f"loss diverged; last finite state saved to {divergence_checkpoint}"
                )
            grads = _normalized(_task_gradients(losses, p_soft, params, mgda_mode), normalize)
            w = min_norm_weights(grads)
            total = sum(float(wi) * losses[t] for wi, t in zip(w, TASKS))
            opt.zero_grad()
            total.backward()
            opt.step()
            last_good = {k: v.clone() for k, v in net.state_dict().items()}
            for t, wi in zip(TASKS, w):
                sums[t] += values[t]
                wsums[t] += float(wi)
        n = len(order)
        report.loss_curve.append({t: sums[t] / n for t in TASKS})
        report.weight_curve.append({t: wsums[t] / n for t in TASKS})
        if refresh_discriminators is not None:
            ranker, detector = refresh_discriminators(net, ranker, detector)
    return report
