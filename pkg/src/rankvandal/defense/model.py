"""Coherence scoring model and the revision flagging rule.

The scorer fuses entity-grid transition features with a semantic pair
representation of the two chunks and is trained with a pairwise ranking
hinge: L = max{0, 1 - f(s_i, s_next) + f(s_i, s_neg)}.
"""

import random
from dataclasses import asdict, dataclass
from pathlib import Path

import torch

from ..corpus import Article
from ..embeddings import WordVectorTable
from ..errors import ContractError, TrainingError
from ..nnutil import DTYPE, as_tensor, generator, linear, mlp, pin_threads
from ..target.features import diff_single_insertion
from .coherence import N_ROLES, CoherenceTriplet, SentenceChunk, entity_grid, extract_chunk


def _unit(v: torch.Tensor) -> torch.Tensor:
    n = torch.linalg.vector_norm(v)
    return v / n if float(n) > 0 else v


@dataclass(frozen=True)
class CoherenceConfig:
    dim: int
    grid_hidden: int = 8
    pair_hidden: int = 32
    head_hidden: int = 16
    seed: int = 0


@dataclass(frozen=True)
class CoherenceReport:
    pairwise_accuracy: float
    n_train: int
    n_holdout: int


class CoherenceModel(torch.nn.Module):
    def __init__(self, config: CoherenceConfig, table: WordVectorTable):
        super().__init__()
        if config.dim != table.dim:
            raise ContractError("config dim does not match word table")
        self.config = config
        self.table = table
        gen = generator(config.seed)
        self.grid_enc = linear(gen, N_ROLES * N_ROLES, config.grid_hidden)
        self.pair_enc = linear(gen, 4 * config.dim, config.pair_hidden)
        self.head = mlp(gen, config.grid_hidden + config.pair_hidden, config.head_hidden, 1)

    def _features(self, a: SentenceChunk, b: SentenceChunk) -> tuple[torch.Tensor, torch.Tensor]:
        # whitespace-normalized view keeps the score a function of content
        a = SentenceChunk(a.text.strip(), a.origin)
        b = SentenceChunk(b.text.strip(), b.origin)
        grid = entity_grid(a, b)
        trans = as_tensor(grid.transitions) / max(1, len(grid.entities))
        u = _unit(as_tensor(self.table.embed_sentence(a.text)))
        v = _unit(as_tensor(self.table.embed_sentence(b.text)))
        pair = torch.cat([u, v, u * v, u - v])
        return trans, pair

    def _score_from(self, trans: torch.Tensor, pair: torch.Tensor) -> torch.Tensor:
        h = torch.cat([torch.tanh(self.grid_enc(trans)), torch.tanh(self.pair_enc(pair))])
        return self.head(h).squeeze()

    def score_t(self, a: SentenceChunk, b: SentenceChunk) -> torch.Tensor:
        return self._score_from(*self._features(a, b))


def coherence_score(model: CoherenceModel, a: SentenceChunk, b: SentenceChunk) -> float:
    with torch.no_grad():
        return float(model.score_t(a, b))


def ranking_loss(pos_score, neg_score) -> torch.Tensor:
    """Pairwise hinge; zero exactly when pos beats neg by the unit margin."""
    pos = pos_score if torch.is_tensor(pos_score) else as_tensor(pos_score)
    neg = neg_score if torch.is_tensor(neg_score) else as_tensor(neg_score)
    return torch.clamp(1.0 - pos + neg, min=0.0)


def train_coherence(
    triplets: list[CoherenceTriplet],
    table: WordVectorTable,
    config: CoherenceConfig | None = None,
    epochs: int = 40,
    lr: float = 3e-3,
    batch_size: int = 32,
    holdout_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[CoherenceModel, CoherenceReport]:
    """Hinge-rank fit; report carries held-out pairwise accuracy."""
    pin_threads()
    if len(triplets) < 500:
        raise TrainingError("need at least 500 triplets")
    config = config or CoherenceConfig(dim=table.dim, seed=seed)
    model = CoherenceModel(config, table)

    rng = random.Random(f"{seed}:coherence-split")
    idx = list(range(len(triplets)))
    rng.shuffle(idx)
    n_hold = max(1, int(round(len(idx) * holdout_fraction)))
    hold_idx, train_idx = idx[:n_hold], idx[n_hold:]
    if not train_idx:
        raise TrainingError("holdout split consumed every training row")

    # chunk featurization is model-independent, so cache it up front
    cache = {}
    for i in set(train_idx) | set(hold_idx):
        t = triplets[i]
        cache[i] = (model._features(t.s_i, t.s_next), model._features(t.s_i, t.s_neg))

    opt = torch.optim.Adam(model.parameters(), lr=lr)
    order_rng = random.Random(f"{seed}:coherence-order")
    for _ in range(epochs):
        order_rng.shuffle(train_idx)
        for start in range(0, len(train_idx), batch_size):
            batch = train_idx[start : start + batch_size]
            opt.zero_grad()
            losses = []
            for i in batch:
                pos_feats, neg_feats = cache[i]
                losses.append(
                    ranking_loss(model._score_from(*pos_feats), model._score_from(*neg_feats))
                )
            torch.stack(losses).mean().backward()
            opt.step()

    hit = 0
    with torch.no_grad():
        for i in hold_idx:
            pos_feats, neg_feats = cache[i]
            if float(model._score_from(*pos_feats)) > float(model._score_from(*neg_feats)):
                hit += 1
    report = CoherenceReport(hit / len(hold_idx), len(train_idx), len(hold_idx))
    return model, report


def joint_scores(model: CoherenceModel, before: Article, after: Article) -> list[tuple[float, float]]:
    """(original-side, inserted-side) coherence score per insertion joint.

    Empty when the insertion landed at the article edge, where no displaced
    neighbor exists to compare against."""
    inserted, at = diff_single_insertion(before, after)
    gap = at - 1
    if not (0 <= gap < len(before.paragraphs) - 1):
        return []
    upper = before.paragraphs[gap]
    lower = before.paragraphs[gap + 1]
    # anchor, displaced original neighbor, and the inserted stand-in; scored
    # directly so an insertion whose text equals its neighbor stays comparable
    comparisons = [
        (extract_chunk(upper, "last"), extract_chunk(lower, "first"), extract_chunk(inserted, "first")),
        (extract_chunk(lower, "first"), extract_chunk(upper, "last"), extract_chunk(inserted, "last")),
    ]
    out = []
    with torch.no_grad():
        for anchor, orig, ins in comparisons:
            out.append((float(model.score_t(anchor, orig)), float(model.score_t(anchor, ins))))
    return out


def detect_revision(
    model: CoherenceModel, before: Article, after: Article, margin: float = 0.0
) -> bool:
    """Flag when either joint scores the inserted side strictly below the
    original side minus the margin."""
    return any(ins < orig - margin for orig, ins in joint_scores(model, before, after))


def save_coherence(model: CoherenceModel, path: str | Path) -> None:
    from ..checkpoint import save_params

    arrays = {name: p.detach().numpy() for name, p in model.state_dict().items()}
    save_params(path, arrays, asdict(model.config))


def load_coherence(path: str | Path, table: WordVectorTable) -> CoherenceModel:
    from ..checkpoint import load_params

    arrays, config = load_params(path)
    model = CoherenceModel(CoherenceConfig(**config), table)
    model.load_state_dict({k: torch.as_tensor(v, dtype=DTYPE) for k, v in arrays.items()})
    return model
