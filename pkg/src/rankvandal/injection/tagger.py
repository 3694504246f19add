"""Attention-augmented sequence tagger for revision entities.

A bidirectional LSTM encodes the raw paragraph. Each token encoding is
enriched with an outer-attention vector (attention over the promotional
content and query tokens) and a contextual self-attention vector, then a
feed-forward layer emits per-label scores that a transition-scored
structured layer turns into sequence probabilities.
"""

import math
import random
from dataclasses import asdict, dataclass
from pathlib import Path

import torch

from ..corpus import tokenize
from ..embeddings import WordVectorTable
from ..errors import ContractError, TrainingError
from ..nnutil import DTYPE, as_tensor, generator, linear, mlp, pin_threads, seed_lstm
from .labels import LABELS, LABEL_INDEX, InjectionInputs, RevisionEntity, TagSequence

N_LABELS = len(LABELS)


@dataclass(frozen=True)
class TaggerConfig:
    dim: int
    hidden: int = 16
    attn: int = 16
    head_hidden: int = 32
    seed: int = 0


@dataclass(frozen=True)
class TaggerReport:
    """Held-out quality. precision/recall/f1 are micro-averaged over the two
    actionable labels; accuracy counts all three."""

    precision: float
    recall: float
    f1: float
    accuracy: float
    n_train: int
    n_holdout: int


class TaggerModel(torch.nn.Module):
    def __init__(self, config: TaggerConfig, table: WordVectorTable):
        super().__init__()
        if config.dim != table.dim:
            raise ContractError("config dim does not match word table")
        self.config = config
        self.table = table
        gen = generator(config.seed)
        enc = 2 * config.hidden
        self.encoder = torch.nn.LSTM(
            config.dim, config.hidden, bidirectional=True, batch_first=True, dtype=DTYPE
        )
        seed_lstm(self.encoder, gen)
        self.outer_query = linear(gen, enc, config.dim)
        self.self_query = linear(gen, enc, config.attn)
        self.self_key = linear(gen, enc, config.attn)
        # token encoding ++ outer vector ++ context vector, per token
        self.emit = mlp(gen, enc + config.dim + enc, config.head_hidden, N_LABELS)
        self.transitions = torch.nn.Parameter(torch.zeros(N_LABELS, N_LABELS, dtype=DTYPE))

    def _embed(self, inputs: InjectionInputs) -> tuple[torch.Tensor, torch.Tensor]:
        para = as_tensor(self.table.embed_tokens(list(inputs.raw_paragraph.tokens)))
        outer_tokens = tokenize(inputs.promotional_content) + tokenize(inputs.target_query)
        outer = as_tensor(self.table.embed_tokens(outer_tokens))
        return para, outer

    def _emissions_from(self, para: torch.Tensor, outer: torch.Tensor) -> torch.Tensor:
        """Per-token label scores, shape (n, 3)."""
        h, _ = self.encoder(para.unsqueeze(0))
        h = h.squeeze(0)  # (n, 2H)
        oq = self.outer_query(h)  # (n, dim)
        ow = torch.softmax(oq @ outer.T / math.sqrt(self.config.dim), dim=1)
        outer_vec = ow @ outer  # (n, dim)
        sq = self.self_query(h)
        sk = self.self_key(h)
        cw = torch.softmax(sq @ sk.T / math.sqrt(self.config.attn), dim=1)
        context = cw @ h  # (n, 2H)
        return self.emit(torch.cat([h, outer_vec, context], dim=1))

    def emissions(self, inputs: InjectionInputs) -> torch.Tensor:
        para, outer = self._embed(inputs)
        if para.shape[0] == 0:
            return torch.zeros((0, N_LABELS), dtype=DTYPE)
        return self._emissions_from(para, outer)

    def _log_alpha(self, emit: torch.Tensor) -> torch.Tensor:
        rows = [emit[0]]
        for t in range(1, emit.shape[0]):
            rows.append(
                torch.logsumexp(rows[-1].unsqueeze(1) + self.transitions, dim=0) + emit[t]
            )
        return torch.stack(rows)

    def sequence_nll(self, inputs: InjectionInputs, tags: TagSequence) -> torch.Tensor:
        para, outer = self._embed(inputs)
        if para.shape[0] == 0:
            raise ContractError("cannot score an empty token sequence")
        if len(tags) != para.shape[0]:
            raise ContractError("tag sequence length does not match token count")
        gold = [LABEL_INDEX[t] for t in tags.labels]
        return self._nll_from(para, outer, gold)

    def _nll_from(self, para: torch.Tensor, outer: torch.Tensor, gold: list[int]) -> torch.Tensor:
        emit = self._emissions_from(para, outer)
        score = emit[0, gold[0]]
        for t in range(1, emit.shape[0]):
            score = score + self.transitions[gold[t - 1], gold[t]] + emit[t, gold[t]]
        log_z = torch.logsumexp(self._log_alpha(emit)[-1], dim=0)
        return log_z - score

    def marginals(self, inputs: InjectionInputs) -> torch.Tensor:
        """Per-token posterior over the 3 labels; every row sums to 1."""
        para, outer = self._embed(inputs)
        n = para.shape[0]
        if n == 0:
            return torch.zeros((0, N_LABELS), dtype=DTYPE)
        emit = self._emissions_from(para, outer)
        alpha = self._log_alpha(emit)
        betas: list[torch.Tensor | None] = [None] * n
        betas[n - 1] = torch.zeros(N_LABELS, dtype=DTYPE)
        for t in range(n - 2, -1, -1):
            betas[t] = torch.logsumexp(
                self.transitions + (emit[t + 1] + betas[t + 1]).unsqueeze(0), dim=1
            )
        return torch.softmax(alpha + torch.stack(betas), dim=1)

    def decode(self, inputs: InjectionInputs) -> tuple[int, ...]:
        """Max-probability label sequence (first-index tie preference)."""
        with torch.no_grad():
            para, outer = self._embed(inputs)
            n = para.shape[0]
            if n == 0:
                return ()
            emit = self._emissions_from(para, outer)
            score = emit[0]
            back = []
            for t in range(1, n):
                best, idx = (score.unsqueeze(1) + self.transitions).max(dim=0)
                back.append(idx)
                score = best + emit[t]
            path = [int(score.argmax())]
            for idx in reversed(back):
                path.append(int(idx[path[-1]]))
            return tuple(reversed(path))


def tag(model: TaggerModel, inputs: InjectionInputs) -> TagSequence:
    return TagSequence(labels=tuple(LABELS[i] for i in model.decode(inputs)))


def _quality(model: TaggerModel, rows: list[tuple[InjectionInputs, TagSequence]]):
    actionable = {RevisionEntity.REPLACEMENT, RevisionEntity.INSERTION}
    tp = fp = fn = hit = total = 0
    for inputs, gold in rows:
        pred = tag(model, inputs).labels
        for p, g in zip(pred, gold.labels):
            total += 1
            if p == g:
                hit += 1
            if p in actionable and p == g:
                tp += 1
            if p in actionable and p != g:
                fp += 1
            if g in actionable and p != g:
                fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = hit / total if total else 0.0
    return precision, recall, f1, accuracy


def train_tagger(
    labeled: list[tuple[InjectionInputs, TagSequence]],
    table: WordVectorTable,
    config: TaggerConfig | None = None,
    epochs: int = 6,
    lr: float = 1e-2,
    batch_size: int = 8,
    holdout_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[TaggerModel, TaggerReport]:
    """Sequence-NLL fit to the labels; report is held-out micro P/R/F1."""
    pin_threads()
    if len(labeled) < 50:
        raise TrainingError("need at least 50 labeled paragraphs")
    seen = {lab for _, tags in labeled for lab in tags.labels}
    missing = [lab.value for lab in LABELS if lab not in seen]
    if missing:
        raise TrainingError(f"label classes missing from training data: {missing}")
    for inputs, tags in labeled:
        if len(tags) != len(inputs.raw_paragraph.tokens):
            raise ContractError("tag sequence length does not match token count")

    config = config or TaggerConfig(dim=table.dim, seed=seed)
    model = TaggerModel(config, table)

    rng = random.Random(f"{seed}:tagger-split")
    idx = list(range(len(labeled)))
    rng.shuffle(idx)
    n_hold = max(1, int(round(len(idx) * holdout_fraction)))
    hold_idx, train_idx = idx[:n_hold], idx[n_hold:]
    if not train_idx:
        raise TrainingError("holdout split consumed every training row")

    # embeddings are training constants; compute them once
    cache = {}
    for i in train_idx:
        inputs, tags = labeled[i]
        para, outer = model._embed(inputs)
        cache[i] = (para, outer, [LABEL_INDEX[t] for t in tags.labels])

    opt = torch.optim.Adam(model.parameters(), lr=lr)
    order_rng = random.Random(f"{seed}:tagger-order")
    for _ in range(epochs):
        order_rng.shuffle(train_idx)
        for start in range(0, len(train_idx), batch_size):
            batch = train_idx[start : start + batch_size]
            opt.zero_grad()
            losses = [model._nll_from(*cache[i]) for i in batch]
            torch.stack(losses).mean().backward()
            opt.step()

    precision, recall, f1, accuracy = _quality(model, [labeled[i] for i in hold_idx])
    report = TaggerReport(precision, recall, f1, accuracy, len(train_idx), len(hold_idx))
    return model, report


def save_tagger(model: TaggerModel, path: str | Path) -> None:
    from ..checkpoint import save_params

    arrays = {name: p.detach().numpy() for name, p in model.state_dict().items()}
    save_params(path, arrays, asdict(model.config))


def load_tagger(path: str | Path, table: WordVectorTable) -> TaggerModel:
    from ..checkpoint import load_params

    arrays, config = load_params(path)
    model = TaggerModel(TaggerConfig(**config), table)
    model.load_state_dict({k: torch.as_tensor(v, dtype=DTYPE) for k, v in arrays.items()})
    return model
