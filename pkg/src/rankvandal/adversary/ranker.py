"""Pointwise substitute ranker distilled from the victim's public scores.

Recurrent encoders produce positional encodings for query and article token
streams; pairwise cosine interaction grids (contextual and raw) are k-max
pooled and fed with log-length scalars to a feed-forward score head.
"""

import random
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from ..corpus import Article, tokenize
from ..embeddings import WordVectorTable
from ..errors import ContractError, TrainingError
from ..metrics import mse, ndcg_at_k
from ..nnutil import DTYPE, as_tensor, cos_t, generator, mlp, pin_threads, seed_lstm


@dataclass(frozen=True)
class RankerConfig:
    dim: int
    hidden: int = 16  # recurrent units per direction
    k_pool: int = 10  # interaction entries kept per grid
    truncate: int = 512  # article tokens seen by the encoder
    head_hidden: int = 32
    seed: int = 0


@dataclass(frozen=True)
class RankerReport:
    holdout_mse: float
    holdout_ndcg20: float
    holdout_ndcg200: float
    n_train: int
    n_holdout: int


def _topk_flat(grid: torch.Tensor, k: int) -> torch.Tensor:
    """k largest interaction values, padded with -1 (the cosine floor)."""
    flat = grid.reshape(-1)
    kk = min(k, flat.numel())
    vals, _ = torch.topk(flat, kk)
    if kk < k:
        vals = torch.cat([vals, torch.full((k - kk,), -1.0, dtype=DTYPE)])
    return vals


class SubstituteRanker(torch.nn.Module):
    def __init__(self, config: RankerConfig, table: WordVectorTable):
        super().__init__()
        if config.dim != table.dim:
            raise ContractError("config dim does not match word table")
        self.config = config
        self.table = table
        gen = generator(config.seed)
        self.encode_query = torch.nn.LSTM(
            config.dim, config.hidden, bidirectional=True, batch_first=True, dtype=DTYPE
        )
        self.encode_article = torch.nn.LSTM(
            config.dim, config.hidden, bidirectional=True, batch_first=True, dtype=DTYPE
        )
        seed_lstm(self.encode_query, gen)
        seed_lstm(self.encode_article, gen)
        self.head = mlp(gen, 2 * config.k_pool + 2, config.head_hidden, 1)

    # vector plumbing --------------------------------------------------------

    def _query_vectors(self, query: str) -> torch.Tensor:
        tokens = tokenize(query)
        if not tokens:
            raise ContractError("query has no tokens")
        return as_tensor(self.table.embed_tokens(tokens))

    def _article_vectors(self, article: Article, reserve: int = 0) -> torch.Tensor:
        tokens = list(article.tokens)[: self.config.truncate - reserve]
        if not tokens:
            raise ContractError("article has no tokens")
        return as_tensor(self.table.embed_tokens(tokens))

    # scoring ----------------------------------------------------------------

    def score_from_vectors(self, q_vecs: torch.Tensor, a_vecs: torch.Tensor) -> torch.Tensor:
        q_states, _ = self.encode_query(q_vecs[None])
        a_states, _ = self.encode_article(a_vecs[None])
        ctx = cos_t(q_states[0][:, None, :], a_states[0][None, :, :])
        raw = cos_t(q_vecs[:, None, :], a_vecs[None, :, :])
        feats = torch.cat(
            [
                _topk_flat(ctx, self.config.k_pool),
                _topk_flat(raw, self.config.k_pool),
                torch.log1p(as_tensor(float(q_vecs.shape[0])))[None],
                torch.log1p(as_tensor(float(a_vecs.shape[0])))[None],
            ]
        )
        return self.head(feats).squeeze(-1)

    def score(self, query: str, article: Article) -> float:
        with torch.no_grad():
            return float(self.score_from_vectors(self._query_vectors(query), self._article_vectors(article)))

    def score_with_insertion(
        self, query: str, article: Article, p_soft: torch.Tensor, insert_index: int
    ) -> torch.Tensor:
        """Score with the soft paragraph spliced in as two pseudo-token vectors
        after paragraph insert_index (truncation keeps them in view)."""
        d = self.config.dim
        if p_soft.shape != (2 * d,):
            raise ContractError("soft representation must have dimension 2d")
        a_vecs = self._article_vectors(article, reserve=2)
        offset = 0
        for p in article.paragraphs[: insert_index + 1]:
            offset += len(p.tokens)
        offset = min(offset, a_vecs.shape[0])
        spliced = torch.cat([a_vecs[:offset], p_soft.view(2, d), a_vecs[offset:]])
        return self.score_from_vectors(self._query_vectors(query), spliced)


def collect_triplets(engine, queries: list[str], corpus, per_query: int):
    """(query, article_id, score) rows from the victim's public search API."""
    rows = []
    usable = 0
    for q in queries:
        results = engine.search(q, k=per_query)
        if sum(1 for r in results if r.score > 0) >= 2:
            usable += 1
        rows.extend((q, r.article_id, r.score) for r in results)
    if usable == 0:
        raise TrainingError("no query returned two scored results")
    return rows


def distill_ranker(
    engine,
    queries: list[str],
    corpus,
    table: WordVectorTable,
    per_query: int = 100,
    config: RankerConfig | None = None,
    epochs: int = 3,
    lr: float = 1e-3,
    batch_size: int = 16,
    holdout_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[SubstituteRanker, RankerReport]:
    """Squared-error regression onto black-box scores; holds out whole queries
    so the report reflects ranking unseen queries."""
    pin_threads()
    config = config or RankerConfig(dim=table.dim, seed=seed)
    rows = collect_triplets(engine, queries, corpus, per_query)

    rng = random.Random(f"{seed}:distill-split")
    shuffled_queries = sorted({q for q, _, _ in rows})
    rng.shuffle(shuffled_queries)
    n_hold = max(1, int(round(len(shuffled_queries) * holdout_fraction)))
    holdout_queries = set(shuffled_queries[:n_hold])
    train_rows = [r for r in rows if r[0] not in holdout_queries]
    hold_rows = [r for r in rows if r[0] in holdout_queries]
    if not train_rows:
        raise TrainingError("holdout split consumed every training row")

    ranker = SubstituteRanker(config, table)
    opt = torch.optim.Adam(ranker.parameters(), lr=lr)
    order_rng = random.Random(f"{seed}:distill-order")

    # token vectors are fixed, so article encodings can reuse cached inputs
    a_cache: dict[str, torch.Tensor] = {}
    q_cache: dict[str, torch.Tensor] = {}

    def vec_pair(q, aid):
        if q not in q_cache:
            q_cache[q] = ranker._query_vectors(q)
        if aid not in a_cache:
            a_cache[aid] = ranker._article_vectors(corpus.articles[aid])
        return q_cache[q], a_cache[aid]

    idx = list(range(len(train_rows)))
    for _ in range(epochs):
        order_rng.shuffle(idx)
        for start in range(0, len(idx), batch_size):
            batch = idx[start : start + batch_size]
            opt.zero_grad()
            losses = []
            for i in batch:
                q, aid, target = train_rows[i]
                qv, av = vec_pair(q, aid)
                pred = ranker.score_from_vectors(qv, av)
                losses.append((pred - float(target)) ** 2)
            torch.stack(losses).mean().backward()
            opt.step()

    report = evaluate_ranker(ranker, hold_rows, corpus, len(train_rows))
    return ranker, report


def evaluate_ranker(ranker, hold_rows, corpus, n_train: int) -> RankerReport:
    by_query: dict[str, list[tuple[str, float]]] = {}
    for q, aid, score in hold_rows:
        by_query.setdefault(q, []).append((aid, score))
    preds, trues = [], []
    ndcg20s, ndcg200s = [], []
    with torch.no_grad():
        for q, pairs in sorted(by_query.items()):
            p = [ranker.score(q, corpus.articles[aid]) for aid, _ in pairs]
            t = [s for _, s in pairs]
            preds.extend(p)
            trues.extend(t)
            ndcg20s.append(ndcg_at_k(p, t, 20))
            ndcg200s.append(ndcg_at_k(p, t, 200))
    if not preds:
        raise TrainingError("no holdout rows to evaluate")
    return RankerReport(
        holdout_mse=mse(preds, trues),
        holdout_ndcg20=float(np.mean(ndcg20s)),
        holdout_ndcg200=float(np.mean(ndcg200s)),
        n_train=n_train,
        n_holdout=len(preds),
    )


def save_ranker(ranker: SubstituteRanker, path: str | Path) -> None:
    from ..checkpoint import save_params

    arrays = {name: p.detach().numpy() for name, p in ranker.state_dict().items()}
    save_params(path, arrays, asdict(ranker.config))


def load_ranker(path: str | Path, table: WordVectorTable) -> SubstituteRanker:
    from ..checkpoint import load_params

    arrays, config = load_params(path)
    ranker = SubstituteRanker(RankerConfig(**config), table)
    ranker.load_state_dict({k: torch.as_tensor(v, dtype=DTYPE) for k, v in arrays.items()})
    return ranker
