"""End-to-end adversarial revision construction, plus the paired random arm.

The wiki is touched only through its public facade (search, score, rank_of,
detect, with_edit); injection is a caller-supplied callable so this module
stays decoupled from the tagger. The random picker runs on the identical raw
pool and serves as the control arm for relative-efficacy comparisons.
"""

import json
import random
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable

from ..corpus import Article, Paragraph, apply_revision, tokenize
from ..embeddings import WordVectorTable, cosine
from ..errors import ContractError, InfeasibleError
from ..retrieval import RetrievalNetwork, prefilter_pool
from .representation import hard_representation

PREFILTER_CAP = 256

# (paragraph, promo text, seed string) -> promo-bearing paragraph,
# raising InfeasibleError when the paragraph offers no usable span
Injector = Callable[[Paragraph, str, str], Paragraph]


@dataclass(frozen=True)
class Revision:
    """One log line: what was inserted where, and how the wiki reacted."""

    query: str
    article_id: str
    paragraph_text: str
    insertion_index: int
    rank_before: int
    rank_after: int | None
    target_damaging: bool
    target_probability: float
    substitute_damaging: bool | None
    substitute_probability: float | None
    topic_sim: float
    neighbor_sim: float
    rank_boosted: bool
    evaded: bool
    on_topic: bool
    consistent: bool
    promoted: bool
    candidate_count: int
    method: str

    @property
    def rank_margin(self) -> float:
        """Positive when the revision moved the article up."""
        if self.rank_after is None:
            return 0.0
        return float(self.rank_before - self.rank_after)


@dataclass(frozen=True)
class AttackOutcome:
    """Batch-runner record: a Revision, or why the pair was infeasible."""

    query: str
    article_id: str
    method: str
    revision: Revision | None = None
    infeasible: str | None = None

    @staticmethod
    def ok(revision: Revision) -> "AttackOutcome":
        return AttackOutcome(
            query=revision.query,
            article_id=revision.article_id,
            method=revision.method,
            revision=revision,
        )

    @staticmethod
    def failed(query: str, article_id: str, method: str, reason: str) -> "AttackOutcome":
        return AttackOutcome(
            query=query, article_id=article_id, method=method, infeasible=reason
        )


def _inject_seed(seed: int, index: int, paragraph: Paragraph) -> str:
    # keyed by provenance when the pool carries it, so both arms inject a
    # given raw paragraph identically
    return f"{seed}:inject:{paragraph.source_id or index}"


def _inject_pool(
    pool: list[Paragraph], promo: str, injector: Injector, seed: int
) -> list[Paragraph]:
    candidates = []
    for i, para in enumerate(pool):
        try:
            candidates.append(injector(para, promo, _inject_seed(seed, i, para)))
        except InfeasibleError:
            continue
    if not candidates:
        raise InfeasibleError("no injectable raw paragraphs")
    return candidates


def _rank_before(victim, query: str, article: Article) -> int:
    rank = victim.rank_of(query, article.id)
    if rank is None:
        raise InfeasibleError(
            f"article {article.id!r} absent from results for query {query!r}"
        )
    return rank


def _finish(
    victim,
    table: WordVectorTable,
    query: str,
    article: Article,
    p_bar: Paragraph,
    insert_at: int,
    rank_before: int,
    candidate_count: int,
    method: str,
    topic_threshold: float,
    consistency_threshold: float,
    subdetector,
) -> Revision:
    revised = apply_revision(article, p_bar, insert_at)
    rank_after = victim.with_edit(revised).rank_of(query, article.id)
    verdict = victim.detect(article, revised)

    v = table.embed_sentence(p_bar.text)
    topic_sim = cosine(v, table.embed_sentence(article.paragraphs[0].text))
    near = (
        cosine(v, table.embed_sentence(article.paragraphs[insert_at].text))
        + cosine(v, table.embed_sentence(article.paragraphs[insert_at + 1].text))
    ) / 2

    substitute_damaging = substitute_probability = None
    if subdetector is not None:
        substitute_probability = subdetector.predict(
            hard_representation(table, p_bar), article
        )
        substitute_damaging = substitute_probability >= 0.5

    rank_boosted = rank_after is not None and rank_after < rank_before
    evaded = not verdict.damaging
    on_topic = topic_sim >= topic_threshold
    consistent = near >= consistency_threshold
    return Revision(
        query=query,
        article_id=article.id,
        paragraph_text=p_bar.text,
        insertion_index=insert_at,
        rank_before=rank_before,
        rank_after=rank_after,
        target_damaging=verdict.damaging,
        target_probability=verdict.damaging_probability,
        substitute_damaging=substitute_damaging,
        substitute_probability=substitute_probability,
        topic_sim=topic_sim,
        neighbor_sim=near,
        rank_boosted=rank_boosted,
        evaded=evaded,
        on_topic=on_topic,
        consistent=consistent,
        promoted=rank_boosted and evaded and on_topic and consistent,
        candidate_count=candidate_count,
        method=method,
    )


def attack(
    victim,
    net: RetrievalNetwork,
    query: str,
    article: Article,
    pool: list[Paragraph],
    promo: str,
    injector: Injector,
    topic_threshold: float,
    consistency_threshold: float,
    subdetector=None,
    seed: int = 0,
    cap: int = PREFILTER_CAP,
) -> Revision:
    """Inject promo into the pool, pick the best candidate and gap with the
    trained towers, submit the revision, and record the wiki's reaction."""
    rank_before = _rank_before(victim, query, article)
    q_tokens = tokenize(query)
    kept = prefilter_pool(q_tokens, pool, net.table, net.config.k_pool, cap)
    candidates = _inject_pool(kept, promo, injector, seed)
    choice = net.select_passage(query, article, candidates)
    p_bar = candidates[choice.argmax_index]
    position = net.insertion_position(article, net.representation(p_bar).detach())
    return _finish(
        victim,
        net.table,
        query,
        article,
        p_bar,
        position.index,
        rank_before,
        len(candidates),
        "model",
        topic_threshold,
        consistency_threshold,
        subdetector,
    )


def random_attack(
    victim,
    table: WordVectorTable,
    query: str,
    article: Article,
    pool: list[Paragraph],
    promo: str,
    injector: Injector,
    topic_threshold: float,
    consistency_threshold: float,
    subdetector=None,
    seed: int = 0,
) -> Revision:
    """Control arm: uniform paragraph pick and uniform gap on the same pool."""
    rank_before = _rank_before(victim, query, article)
    if not pool:
        raise InfeasibleError("no injectable raw paragraphs")
    rng = random.Random(f"{seed}:random-arm:{query}:{article.id}")
    order = list(range(len(pool)))
    rng.shuffle(order)
    for i in order:
        try:
            p_bar = injector(pool[i], promo, _inject_seed(seed, i, pool[i]))
        except InfeasibleError:
            continue
        insert_at = rng.randrange(len(article.paragraphs) - 1)
        return _finish(
            victim,
            table,
            query,
            article,
            p_bar,
            insert_at,
            rank_before,
            1,
            "random",
            topic_threshold,
            consistency_threshold,
            subdetector,
        )
    raise InfeasibleError("no injectable raw paragraphs")


def sample_targets(
    victim,
    query: str,
    max_rank: int = 1000,
    per_bucket: int = 10,
    bucket_size: int = 100,
    seed: int = 0,
) -> list[tuple[str, int]]:
    """Up to `per_bucket` target articles per rank bucket [2..100], [101..200],
    ... drawn from the query's results; rank 1 is never a target."""
    results = victim.search(query, max_rank)
    buckets: dict[int, list] = {}
    for r in results:
        # zero-score rows are page filler, not reachable targets: boosting an
        # article for a query it never matches is not a ranking attack
        if r.rank == 1 or r.score == 0.0:
            continue
        buckets.setdefault((r.rank - 1) // bucket_size, []).append(r)
    rng = random.Random(f"{seed}:targets:{query}")
    picked = []
    for b in sorted(buckets):
        rows = buckets[b]
        take = rows if len(rows) <= per_bucket else rng.sample(rows, per_bucket)
        picked.extend(sorted((r.rank, r.article_id) for r in take))
    return [(aid, rank) for rank, aid in picked]


def save_revision_log(revisions: list[Revision], path: str | Path) -> None:
    lines = [json.dumps(asdict(r), sort_keys=True) for r in revisions]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_revision_log(path: str | Path) -> list[Revision]:
    revisions = []
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            revisions.append(Revision(**json.loads(line)))
        except (json.JSONDecodeError, TypeError) as e:
            raise ContractError(f"bad revision log line {n}: {e}") from e
    return revisions
