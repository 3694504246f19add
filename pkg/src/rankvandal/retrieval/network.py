"""The twin towers, the passage selector, and the insertion-position picker."""

from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from ..corpus import Article, Paragraph, tokenize
from ..embeddings import WordVectorTable
from ..errors import ContractError
from ..nnutil import DTYPE, as_tensor, cos_t, generator, identity_linear, mlp
from .density import word_density_core


@dataclass(frozen=True)
class RetrievalConfig:
    dim: int
    hidden: int = 32
    k_pool: int = 3  # top-k mean inside word density
    k_top: int = 5  # candidates blended into the soft representation
    seed: int = 0


@dataclass(frozen=True)
class RetrievalOutput:
    """Selector output: relevance values (softmax sum, totals 2), the argmax
    candidate, and during training a top-k probability-weighted mixture."""

    probabilities: np.ndarray
    argmax_index: int
    soft_representation: np.ndarray | None = None


@dataclass(frozen=True)
class InsertionChoice:
    index: int
    probabilities: np.ndarray


class SemanticTower(torch.nn.Module):
    """Shared projection scoring article-paragraph fit.

    One projection serves both inputs so identical inputs score exactly 1.
    """

    def __init__(self, dim: int, hidden: int, gen: torch.Generator):
        super().__init__()
        self.proj = mlp(gen, dim, hidden, hidden)

    def similarity(self, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
        return cos_t(self.proj(a), self.proj(b))


class WordMatchTower(torch.nn.Module):
    """Query-paragraph tower: a semantic sub-path plus per-side word encoders
    feeding the match-density pooling."""

    def __init__(self, dim: int, hidden: int, k_pool: int, gen: torch.Generator):
        super().__init__()
        self.proj = mlp(gen, dim, hidden, hidden)
        # identity start keeps encoded vectors aligned with the raw table,
        # which the frozen discriminators were trained on
        self.encode_query = identity_linear(dim)
        self.encode_paragraph = identity_linear(dim)
        self.k_pool = k_pool

    def semantic(self, q_sent: torch.Tensor, p_sent: torch.Tensor) -> torch.Tensor:
        return cos_t(self.proj(q_sent), self.proj(p_sent))

    def density(self, q_words: torch.Tensor, p_words: torch.Tensor) -> torch.Tensor:
        return word_density_core(
            self.encode_query(q_words), self.encode_paragraph(p_words), self.k_pool
        )


class RetrievalNetwork(torch.nn.Module):
    def __init__(self, config: RetrievalConfig, table: WordVectorTable):
        super().__init__()
        if config.dim != table.dim:
            raise ContractError("config dim does not match word table")
        if config.k_pool < 1 or config.k_top < 1:
            raise ContractError("pooling parameters must be >= 1")
        self.config = config
        self.table = table
        gen = generator(config.seed)
        self.semantic_tower = SemanticTower(config.dim, config.hidden, gen)
        self.word_tower = WordMatchTower(config.dim, config.hidden, config.k_pool, gen)

    # representations ------------------------------------------------------

    def representation(self, paragraph: Paragraph) -> torch.Tensor:
        """Candidate vector: sentence vector stacked on the mean encoded word
        vector. Zero for token-free paragraphs."""
        d = self.config.dim
        if not paragraph.tokens:
            return torch.zeros(2 * d, dtype=DTYPE)
        sent = as_tensor(self.table.embed_token_list(list(paragraph.tokens)))
        words = as_tensor(self.table.embed_tokens(list(paragraph.tokens)))
        enc = self.word_tower.encode_paragraph(words).mean(dim=0)
        return torch.cat([sent, enc])

    def _article_vector(self, article: Article) -> torch.Tensor:
        return as_tensor(self.table.embed_token_list(list(article.tokens)))

    # the two similarity channels ------------------------------------------

    def semantic_similarity(self, a_repr: np.ndarray, p_repr: np.ndarray) -> float:
        with torch.no_grad():
            return float(
                self.semantic_tower.similarity(as_tensor(a_repr), as_tensor(p_repr))
            )

    def word_density_similarity(self, q_tokens: list[str], p_tokens: list[str]) -> float:
        if not q_tokens or not p_tokens:
            raise ContractError("word density needs non-empty token lists")
        with torch.no_grad():
            q = as_tensor(self.table.embed_tokens(q_tokens))
            p = as_tensor(self.table.embed_tokens(p_tokens))
            return float(self.word_tower.density(q, p))

    def query_similarity(self, query: str, paragraph: Paragraph) -> float:
        """Semantic sub-path similarity scaled by word match density."""
        q_tokens = tokenize(query)
        if not q_tokens or not paragraph.tokens:
            raise ContractError("query similarity needs non-empty token lists")
        with torch.no_grad():
            return float(self._query_sim(q_tokens, query, paragraph))

    def _query_sim(self, q_tokens: list[str], query: str, paragraph: Paragraph) -> torch.Tensor:
        q_sent = as_tensor(self.table.embed_sentence(query))
        p_sent = as_tensor(self.table.embed_token_list(list(paragraph.tokens)))
        sem = self.word_tower.semantic(q_sent, p_sent)
        q_words = as_tensor(self.table.embed_tokens(q_tokens))
        p_words = as_tensor(self.table.embed_tokens(list(paragraph.tokens)))
        dens = self.word_tower.density(q_words, p_words)
        return sem * dens

    # selector ---------------------------------------------------------------

    def similarity_vectors(
        self, query: str, article: Article, candidates: list[Paragraph]
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Differentiable (Sim^q, Sim^a) over candidates."""
        if not candidates:
            raise ContractError("need at least one candidate")
        q_tokens = tokenize(query)
        if not q_tokens:
            raise ContractError("query has no tokens")
        a_vec = self._article_vector(article)
        sim_q, sim_a = [], []
        for cand in candidates:
            if not cand.tokens:
                raise ContractError("candidate paragraph has no tokens")
            p_sent = as_tensor(self.table.embed_token_list(list(cand.tokens)))
            sim_q.append(self._query_sim(q_tokens, query, cand))
            sim_a.append(self.semantic_tower.similarity(a_vec, p_sent))
        return torch.stack(sim_q), torch.stack(sim_a)

    def probabilities(
        self, query: str, article: Article, candidates: list[Paragraph]
    ) -> torch.Tensor:
        """Relevance vector: softmax over each channel, added. Sums to 2."""
        sim_q, sim_a = self.similarity_vectors(query, article, candidates)
        return torch.softmax(sim_q, dim=0) + torch.softmax(sim_a, dim=0)

    def select_passage(
        self,
        query: str,
        article: Article,
        candidates: list[Paragraph],
        with_soft: bool = False,
    ) -> RetrievalOutput:
        with torch.no_grad():
            probs = self.probabilities(query, article, candidates)
            soft = None
            if with_soft:
                soft = self.soft_representation(candidates, probs).numpy()
            p = probs.numpy()
        # np.argmax takes the first maximum: lowest-index tiebreak
        return RetrievalOutput(
            probabilities=p, argmax_index=int(np.argmax(p)), soft_representation=soft
        )

    def soft_representation(
        self, candidates: list[Paragraph], probs, k: int | None = None
    ) -> torch.Tensor:
        """Top-k candidates blended by their normalized relevance values."""
        k = self.config.k_top if k is None else k
        if k < 1 or k > len(candidates):
            raise ContractError("k must be in [1, n_candidates]")
        probs_t = probs if isinstance(probs, torch.Tensor) else as_tensor(probs)
        order = np.argsort(-probs_t.detach().numpy(), kind="stable")[:k]
        weights = probs_t[order] / probs_t[order].sum()
        reps = torch.stack([self.representation(candidates[i]) for i in order])
        return (weights[:, None] * reps).sum(dim=0)

    # insertion position ------------------------------------------------------

    def gap_scores(self, article: Article, p_repr: torch.Tensor) -> torch.Tensor:
        """Differentiable mean-neighbor cosines, one per adjacent pair."""
        if len(article.paragraphs) < 2:
            raise ContractError("insertion position needs >= 2 paragraphs")
        reps = torch.stack([self.representation(p) for p in article.paragraphs])
        cos = cos_t(p_repr[None, :], reps)
        return (cos[:-1] + cos[1:]) / 2

    def insertion_position(self, article: Article, p_repr) -> InsertionChoice:
        p_t = p_repr if isinstance(p_repr, torch.Tensor) else as_tensor(p_repr)
        with torch.no_grad():
            g = self.gap_scores(article, p_t)
            probs = torch.softmax(g, dim=0).numpy()
        return InsertionChoice(index=int(np.argmax(probs)), probabilities=probs)


def save_retrieval(net: RetrievalNetwork, path: str | Path) -> None:
    from ..checkpoint import save_params

    arrays = {name: p.detach().numpy() for name, p in net.state_dict().items()}
    save_params(path, arrays, asdict(net.config))


def load_retrieval(path: str | Path, table: WordVectorTable) -> RetrievalNetwork:
    from ..checkpoint import load_params

    arrays, config = load_params(path)
    net = RetrievalNetwork(RetrievalConfig(**config), table)
    net.load_state_dict({k: torch.as_tensor(v, dtype=DTYPE) for k, v in arrays.items()})
    return net
