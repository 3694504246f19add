import random
from pathlib import Path

import numpy as np
import pytest

from rankvandal.corpus import Article, Corpus, Paragraph, VocabSpec, build_fixture
from rankvandal.embeddings import build_fixture_vectors, load_word_vectors

DATA_DIR = Path(__file__).parent / "data"


def make_article(aid: str, paragraph_texts: list[str], category: str = "test") -> Article:
    return Article(
        id=aid,
        title=aid,
        paragraphs=tuple(Paragraph.from_text(t) for t in paragraph_texts),
        category_tags=(category,),
    )


@pytest.fixture(scope="session")
def fixture_vectors():
    return load_word_vectors(DATA_DIR / "vectors_50d.txt")


@pytest.fixture(scope="session")
def small_fixture():
    """Shared 300-article synthetic world: corpus, queries, promos."""
    return build_fixture(11, 300, VocabSpec(n_categories=15))


@pytest.fixture(scope="session")
def small_table(small_fixture):
    """Word vectors matched to the small_fixture vocabulary."""
    return build_fixture_vectors(small_fixture.word_vector_tokens, dim=50, seed=0)


def simplex_grid(n_tasks: int, step: float) -> np.ndarray:
    """All weight vectors on the n-task simplex at the given resolution."""
    units = round(1 / step)
    if n_tasks == 2:
        pts = [(i, units - i) for i in range(units + 1)]
    elif n_tasks == 3:
        pts = [
            (i, j, units - i - j)
            for i in range(units + 1)
            for j in range(units + 1 - i)
        ]
    elif n_tasks == 4:
        pts = [
            (i, j, k, units - i - j - k)
            for i in range(units + 1)
            for j in range(units + 1 - i)
            for k in range(units + 1 - i - j)
        ]
    else:
        raise ValueError("2-4 tasks only")
    return np.array(pts, dtype=np.float64) / units


def grid_min_blend_norm(grads: list[np.ndarray], step: float) -> float:
    """Brute-force min over the simplex grid of ||sum w_i g_i||^2."""
    G = np.stack([np.asarray(g, dtype=np.float64).ravel() for g in grads])
    M = G @ G.T
    W = simplex_grid(len(grads), step)
    return float(np.min(np.einsum("ij,jk,ik->i", W, M, W)))


@pytest.fixture()
def rng():
    return random.Random(1234)


@pytest.fixture()
def np_rng():
    return np.random.default_rng(1234)
