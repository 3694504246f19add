"""Substitute vandalism detector trained on the victim detector's verdicts.

Self-attention reads the inserted paragraph's two-token representation;
cross-attention matches it against the article's per-paragraph tokens; a
feed-forward head emits (benign-evading view of) damaging/not probabilities
that always sum to 1.
"""

import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from ..corpus import Article
from ..embeddings import WordVectorTable
from ..errors import ContractError, TrainingError
from ..nnutil import DTYPE, as_tensor, generator, linear, mlp, pin_threads
from .representation import article_pair_rows


@dataclass(frozen=True)
class DetectorConfig:
    dim: int
    attn: int = 16
    head_hidden: int = 32
    max_paragraphs: int = 64
    seed: int = 0


@dataclass(frozen=True)
class DetectorReport:
    precision: float
    recall: float
    f1: float
    n_train: int
    n_holdout: int


class SubstituteDetector(torch.nn.Module):
    def __init__(self, config: DetectorConfig, table: WordVectorTable):
        super().__init__()
        if config.dim != table.dim:
            raise ContractError("config dim does not match word table")
        self.config = config
        self.table = table
        gen = generator(config.seed)
        a = config.attn
        self.self_q = linear(gen, config.dim, a)
        self.self_k = linear(gen, config.dim, a)
        self.self_v = linear(gen, config.dim, a)
        self.cross_q = linear(gen, config.dim, a)
        self.cross_k = linear(gen, config.dim, a)
        self.cross_v = linear(gen, config.dim, a)
        self.head = mlp(gen, 2 * a, config.head_hidden, 2)

    def _forward(self, ins: torch.Tensor, art_rows: torch.Tensor) -> torch.Tensor:
        scale = math.sqrt(self.config.attn)
        q_s = self.self_q(ins)
        attn_s = torch.softmax(q_s @ self.self_k(ins).T / scale, dim=-1)
        self_out = attn_s @ self.self_v(ins)
        q_c = self.cross_q(ins)
        attn_c = torch.softmax(q_c @ self.cross_k(art_rows).T / scale, dim=-1)
        cross_out = attn_c @ self.cross_v(art_rows)
        pooled = torch.cat([self_out, cross_out], dim=-1).mean(dim=0)
        return torch.softmax(self.head(pooled), dim=-1)

    def probabilities(self, p_repr, article: Article) -> tuple[torch.Tensor, torch.Tensor]:
        """(d_damaging, d_benign), summing to 1; differentiable in p_repr."""
        d = self.config.dim
        ins = p_repr if isinstance(p_repr, torch.Tensor) else as_tensor(p_repr)
        if ins.shape != (2 * d,):
            raise ContractError("insertion representation must have dimension 2d")
        rows = as_tensor(article_pair_rows(self.table, article, self.config.max_paragraphs))
        probs = self._forward(ins.view(2, d), rows)
        return probs[0], probs[1]

    def predict(self, p_repr: np.ndarray, article: Article) -> float:
        with torch.no_grad():
            d_true, _ = self.probabilities(p_repr, article)
            return float(d_true)


def train_substitute_detector(
    labeled: list[tuple[np.ndarray, Article, bool]],
    table: WordVectorTable,
    config: DetectorConfig | None = None,
    epochs: int = 8,
    lr: float = 3e-3,
    batch_size: int = 16,
    holdout_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[SubstituteDetector, DetectorReport]:
    """Cross-entropy fit to the black-box verdicts; report is held-out P/R/F1."""
    pin_threads()
    labels = [y for _, _, y in labeled]
    if not (any(labels) and not all(labels)):
        raise TrainingError("need both damaging and benign examples")
    config = config or DetectorConfig(dim=table.dim, seed=seed)
    det = SubstituteDetector(config, table)

    rng = random.Random(f"{seed}:subdetector-split")
    idx = list(range(len(labeled)))
    rng.shuffle(idx)
    n_hold = max(1, int(round(len(idx) * holdout_fraction)))
    hold_idx, train_idx = idx[:n_hold], idx[n_hold:]
    if not train_idx:
        raise TrainingError("holdout split consumed every training row")

    opt = torch.optim.Adam(det.parameters(), lr=lr)
    order_rng = random.Random(f"{seed}:subdetector-order")
    for _ in range(epochs):
        order_rng.shuffle(train_idx)
        for start in range(0, len(train_idx), batch_size):
            batch = train_idx[start : start + batch_size]
            opt.zero_grad()
            losses = []
            for i in batch:
                rep, article, y = labeled[i]
                d_true, d_false = det.probabilities(rep, article)
                p = d_true if y else d_false
                losses.append(-torch.log(torch.clamp(p, 1e-12, 1.0)))
            torch.stack(losses).mean().backward()
            opt.step()

    tp = fp = fn = 0
    for i in hold_idx:
        rep, article, y = labeled[i]
        pred = det.predict(rep, article) >= 0.5
        if pred and y:
            tp += 1
        elif pred and not y:
            fp += 1
        elif not pred and y:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    report = DetectorReport(precision, recall, f1, len(train_idx), len(hold_idx))
    return det, report


def save_subdetector(det: SubstituteDetector, path: str | Path) -> None:
    from ..checkpoint import save_params

    arrays = {name: p.detach().numpy() for name, p in det.state_dict().items()}
    save_params(path, arrays, asdict(det.config))


def load_subdetector(path: str | Path, table: WordVectorTable) -> SubstituteDetector:
    from ..checkpoint import load_params

    arrays, config = load_params(path)
    det = SubstituteDetector(DetectorConfig(**config), table)
    det.load_state_dict({k: torch.as_tensor(v, dtype=DTYPE) for k, v in arrays.items()})
    return det
