"""Article data model, on-disk corpus format, and the synthetic corpus generator.

Corpus files are UTF-8 JSON lines, one article per line:
    {"id": ..., "title": ..., "category_tags": [...], "paragraphs": ["...", ...]}
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ContractError, IntegrityError, ParseError

# Tokens are lowercased alphanumeric runs; internal hyphens are kept so
# hyphenated drug names survive as one token.
_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:-[A-Za-z0-9]+)*")

# A sentence ends at [.!?]+ followed by whitespace and an uppercase letter,
# unless the word before the punctuation is a known abbreviation.
_SENT_BREAK_RE = re.compile(r"[.!?]+(?=\s+[A-Z\"'(])")
_ABBREVIATIONS = {
    "dr", "mr", "mrs", "ms", "prof", "st", "vs", "etc", "fig", "no",
    "approx", "e.g", "i.e", "al", "jr", "sr", "co", "dept",
}


def tokenize(text: str) -> list[str]:
    """Lowercase token list for a piece of text."""
    return [m.group(0).lower() for m in _TOKEN_RE.finditer(text)]


def tokenize_with_spans(text: str) -> list[tuple[str, int, int]]:
    """Cased tokens with character offsets, same boundaries as tokenize()."""
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _is_abbreviation(text: str, punct_pos: int) -> bool:
    prefix = text[:punct_pos]
    m = re.search(r"([A-Za-z](?:[A-Za-z.]*[A-Za-z])?)$", prefix)
    if m is None:
        return False
    return m.group(1).lower().rstrip(".") in _ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
    """Deterministic sentence split; slices of text, so no character is lost."""
    breaks: list[int] = []
    for m in _SENT_BREAK_RE.finditer(text):
        if not _is_abbreviation(text, m.start()):
            breaks.append(m.end())
    sentences = []
    prev = 0
    for b in breaks:
        chunk = text[prev:b].strip()
        if chunk:
            sentences.append(chunk)
        prev = b
    tail = text[prev:].strip()
    if tail:
        sentences.append(tail)
    return sentences


@dataclass(frozen=True)
class Paragraph:
    """One paragraph with derived sentence and token views.

    source_id carries provenance ("<article_id>#p<index>") for paragraphs that
    were drawn from a pool; it is not serialized with articles.
    """

    text: str
    sentences: tuple[str, ...]
    tokens: tuple[str, ...]
    source_id: str | None = None

    @staticmethod
    def from_text(text: str, source_id: str | None = None) -> "Paragraph":
        if not text or not text.strip():
            raise IntegrityError("paragraph text must be non-empty")
        return Paragraph(
            text=text,
            sentences=tuple(split_sentences(text)),
            tokens=tuple(tokenize(text)),
            source_id=source_id,
        )


@dataclass(frozen=True)
class Article:
    id: str
    title: str
    paragraphs: tuple[Paragraph, ...]
    category_tags: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.paragraphs) < 2:
            raise IntegrityError(f"article {self.id!r} has fewer than 2 paragraphs")

    @property
    def tokens(self) -> list[str]:
        out: list[str] = []
        for p in self.paragraphs:
            out.extend(p.tokens)
        return out


@dataclass
class Corpus:
    articles: dict[str, Article] = field(default_factory=dict)
    raw_paragraphs: list[Paragraph] = field(default_factory=list)

    def add(self, article: Article) -> None:
        if article.id in self.articles:
            raise IntegrityError(f"duplicate article id {article.id!r}")
        self.articles[article.id] = article

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self):
        return iter(self.articles.values())


def lead_paragraph(a: Article) -> Paragraph:
    """The article's first paragraph, used as its topic proxy."""
    return a.paragraphs[0]


def apply_revision(a: Article, p: Paragraph, i: int) -> Article:
    """New article with p inserted between paragraph positions i and i+1."""
    if not (0 <= i < len(a.paragraphs)):
        raise ContractError(f"insertion index {i} out of range for {len(a.paragraphs)} paragraphs")
    if not p.text.strip():
        raise ContractError("inserted paragraph must be non-empty")
    paras = a.paragraphs[: i + 1] + (p,) + a.paragraphs[i + 1 :]
    return Article(id=a.id, title=a.title, paragraphs=paras, category_tags=a.category_tags)


def _article_record(a: Article) -> str:
    record = {
        "id": a.id,
        "title": a.title,
        "category_tags": list(a.category_tags),
        "paragraphs": [p.text for p in a.paragraphs],
    }
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def save_corpus(c: Corpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in c:
            fh.write(_article_record(a) + "\n")


def load_corpus(path: str | Path) -> Corpus:
    path = Path(path)
    if not path.exists():
        raise ParseError(f"corpus file not found: {path}")
    corpus = Corpus()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                art = Article(
                    id=str(rec["id"]),
                    title=str(rec["title"]),
                    paragraphs=tuple(Paragraph.from_text(t) for t in rec["paragraphs"]),
                    category_tags=tuple(str(t) for t in rec["category_tags"]),
                )
            except IntegrityError as exc:
                raise IntegrityError(f"line {lineno}: {exc}") from exc
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"line {lineno}: malformed record ({exc})") from exc
            corpus.add(art)
    return corpus


def build_raw_pool(
    corpus: Corpus, exclude_article_ids: Iterable[str], seed: int, size: int
) -> list[Paragraph]:
    """Sample a raw-paragraph pool, tagged with provenance, never from excluded articles."""
    excluded = set(exclude_article_ids)
    entries: list[Paragraph] = []
    for a in corpus:
        if a.id in excluded:
            continue
        for idx, p in enumerate(a.paragraphs):
            entries.append(
                Paragraph(p.text, p.sentences, p.tokens, source_id=f"{a.id}#p{idx}")
            )
    rng = random.Random(seed)
    if size >= len(entries):
        return entries
    return rng.sample(entries, size)


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"

_GLUE_SENTENCES = [
    "The {bg0} survey of {bg1} and {bg2} continued for several {bg3} periods.",
    "Later reviews of {bg0} noted {bg1} alongside {bg2} in most {bg3} records.",
    "A {bg0} account of {bg1} compared {bg2} with earlier {bg3} findings.",
]

_TOPIC_SENTENCES = [
    "{drug} is a {t0} compound used against {t1} and {t2}.",
    "Studies of {t0} linked {drug} with reduced {t1} in {t2} cases.",
    "The {t0} effects of {drug} on {t1} remain central to {t2} research.",
    "{Entity} reported that {drug} improved {t0} outcomes in {t1} trials.",
    "Treatment of {t0} with {drug} requires monitoring of {t1} and {t2}.",
]

_PROMO_SENTENCES = [
    "{drug} is sold under the brand name {Brand} by {Org} in {Geo}.",
    "{drug} was marketed by {Org} and supplied across {Geo}.",
    "The compound is available from {Org} and distributed in {Geo}.",
    "{Entity} said {drug} was manufactured by {Org} for the {Geo} market.",
]

_ENTITY_SENTENCES = [
    "{Entity} described the {t0} process during work on {bg0}.",
    "According to {Entity}, the {t0} results matched {bg0} expectations.",
    "{Entity} reviewed {t0} and {t1} data collected near {Geo}.",
]


@dataclass(frozen=True)
class VocabSpec:
    """Knobs for the synthetic generator."""

    n_categories: int = 100
    topic_tokens_per_category: int = 24
    background_tokens: int = 1500
    paragraphs_range: tuple[int, int] = (5, 9)
    sentences_range: tuple[int, int] = (3, 5)
    two_token_query_rate: float = 0.1
    n_promos: int = 8
    # Share of filler sentences that name the article's own entities instead
    # of generic background vocabulary. Raising it yields prose whose adjacent
    # paragraphs share subject mentions, as encyclopedia articles do.
    entity_sentence_rate: float = 0.35


@dataclass
class FixtureBundle:
    corpus: Corpus
    queries: list[str]
    promos: list[str]
    word_vector_tokens: dict[str, str]  # token -> category name ("" = background)


def _coin_word(rng: random.Random, syllables: int) -> str:
    return "".join(
        rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(syllables)
    )


def _load_data_lines(name: str) -> list[str]:
    here = Path(__file__).parent / "data" / name
    return [ln.strip() for ln in here.read_text(encoding="utf-8").splitlines() if ln.strip()]


def build_fixture(seed: int, n_articles: int, spec: VocabSpec | None = None) -> FixtureBundle:
    """Deterministic synthetic corpus plus the query/promo lists that go with it."""
    if n_articles < 10:
        raise ContractError("n_articles must be >= 10")
    spec = spec or VocabSpec()
    rng = random.Random(seed)
    geos = _load_data_lines("geolocations.txt")
    org_suffixes = _load_data_lines("org_suffixes.txt")

    background = []
    seen: set[str] = set()
    while len(background) < spec.background_tokens:
        w = _coin_word(rng, rng.randint(2, 4))
        if w not in seen:
            seen.add(w)
            background.append(w)

    categories = []
    n_cats = min(spec.n_categories, max(2, n_articles // 4))
    for _ in range(n_cats):
        name = _coin_word(rng, 3) + "osis"
        while name in seen:
            name = _coin_word(rng, 3) + "osis"
        seen.add(name)
        topics = []
        while len(topics) < spec.topic_tokens_per_category:
            w = _coin_word(rng, rng.randint(2, 3))
            if w not in seen:
                seen.add(w)
                topics.append(w)
        drug = _coin_word(rng, 3) + rng.choice(["il", "ol", "ine", "ide"])
        while drug in seen:
            drug = _coin_word(rng, 3) + rng.choice(["il", "ol", "ine", "ide"])
        seen.add(drug)
        query = drug
        if rng.random() < spec.two_token_query_rate:
            query = drug + " " + rng.choice(["xr", "sr", "forte"])
        brand = _coin_word(rng, 2).capitalize() + rng.choice(["ex", "an", "or"])
        categories.append(
            {"name": name, "topics": topics, "drug": drug, "query": query, "brand": brand}
        )

    promos = []
    while len(promos) < spec.n_promos:
        name = _coin_word(rng, 2).capitalize() + " " + rng.choice(["Pharmacy", "Dispensary", "Drugstore"])
        if name not in promos:
            promos.append(name)

    corpus = Corpus()
    vector_tokens: dict[str, str] = {w: "" for w in background}
    for cat in categories:
        for t in cat["topics"]:
            vector_tokens[t] = cat["name"]
        vector_tokens[cat["drug"]] = cat["name"]
        vector_tokens[cat["brand"].lower()] = cat["name"]
        vector_tokens[cat["name"]] = cat["name"]

    for idx in range(n_articles):
        cat = categories[idx % len(categories)]
        # String seeds hash via sha512 inside random.seed, so they are stable
        # across processes (unlike tuple seeds, which use salted hash()).
        rng_a = random.Random(f"{seed}:article:{idx}")
        entities = [
            _coin_word(rng_a, 2).capitalize() + _coin_word(rng_a, 1)
            for _ in range(rng_a.randint(2, 3))
        ]
        org = _coin_word(rng_a, 2).capitalize() + " " + rng_a.choice(org_suffixes)
        geo = rng_a.choice(geos)
        for e in entities:
            vector_tokens.setdefault(e.lower(), cat["name"])
        vector_tokens.setdefault(org.split()[0].lower(), cat["name"])

        # Per-article emphasis decides how often the drug token recurs, which
        # gives the search engine a relevance gradient inside each category.
        drug_mentions = rng_a.choice([1, 1, 2, 2, 3, 4, 5, 6])
        n_paras = rng_a.randint(*spec.paragraphs_range)
        paragraphs = []
        mentions_left = drug_mentions
        for pidx in range(n_paras):
            n_sents = rng_a.randint(*spec.sentences_range)
            sents = []
            for sidx in range(n_sents):
                fill = {
                    "drug": cat["drug"],
                    "Brand": cat["brand"],
                    "Entity": rng_a.choice(entities),
                    "Org": org,
                    "Geo": geo,
                    "t0": rng_a.choice(cat["topics"]),
                    "t1": rng_a.choice(cat["topics"]),
                    "t2": rng_a.choice(cat["topics"]),
                    "bg0": rng_a.choice(background),
                    "bg1": rng_a.choice(background),
                    "bg2": rng_a.choice(background),
                    "bg3": rng_a.choice(background),
                }
                lead_sentence = pidx == 0 and sidx == 0
                if lead_sentence:
                    pool = _TOPIC_SENTENCES
                elif mentions_left > 0 and rng_a.random() < 0.5:
                    pool = _TOPIC_SENTENCES if rng_a.random() < 0.7 else _PROMO_SENTENCES
                    mentions_left -= 1
                elif rng_a.random() < spec.entity_sentence_rate:
                    pool = _ENTITY_SENTENCES
                else:
                    pool = _GLUE_SENTENCES
                s = rng_a.choice(pool).format(**fill)
                sents.append(s[0].upper() + s[1:])
            paragraphs.append(Paragraph.from_text(" ".join(sents)))
        corpus.add(
            Article(
                id=f"a{idx:05d}",
                title=f"{cat['drug'].capitalize()} ({cat['name']})",
                paragraphs=tuple(paragraphs),
                category_tags=(cat["name"],),
            )
        )

    queries = [cat["query"] for cat in categories]
    return FixtureBundle(corpus=corpus, queries=queries, promos=promos, word_vector_tokens=vector_tokens)


def synth_corpus(seed: int, n_articles: int, spec: VocabSpec | None = None) -> Corpus:
    """Deterministic topic-clustered synthetic corpus."""
    return build_fixture(seed, n_articles, spec).corpus
