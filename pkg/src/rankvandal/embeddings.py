"""Word-vector table, mean-pooled sentence embeddings, and cosine utilities.

The table format is plain text: token then d floats per line. Out-of-vocabulary
tokens get a deterministic random unit vector derived by hashing the token, so
every caller sees the same vector for the same token without coordination.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .corpus import tokenize
from .errors import ContractError, ParseError


def hash_unit_vector(token: str, dim: int, salt: int = 0) -> np.ndarray:
    """Deterministic pseudo-random unit vector for a token (platform stable)."""
    digest = hashlib.blake2b(f"{salt}:{token}".encode("utf-8"), digest_size=8).digest()
    gen = np.random.Generator(np.random.PCG64(int.from_bytes(digest, "big")))
    v = gen.standard_normal(dim)
    n = np.linalg.norm(v)
    if n == 0.0:  # astronomically unlikely; keep the contract total
        v[0] = 1.0
        n = 1.0
    return v / n


class WordVectorTable:
    """token -> dense float64 vector; OOV policy = hash-seeded unit vector."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int, oov_salt: int = 0):
        if dim < 8:
            raise ContractError("vector dimension must be >= 8")
        for tok, v in vectors.items():
            if v.shape != (dim,):
                raise ParseError(f"vector for {tok!r} has dimension {v.shape}, expected ({dim},)")
        self.vectors = {t: np.asarray(v, dtype=np.float64) for t, v in vectors.items()}
        self.dim = dim
        self.oov_salt = oov_salt
        self._oov_cache: dict[str, np.ndarray] = {}

    def __contains__(self, token: str) -> bool:
        return token in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def get(self, token: str) -> np.ndarray:
        v = self.vectors.get(token)
        if v is not None:
            return v
        v = self._oov_cache.get(token)
        if v is None:
            v = hash_unit_vector(token, self.dim, self.oov_salt)
            self._oov_cache[token] = v
        return v

    def embed_tokens(self, tokens: list[str] | tuple[str, ...]) -> np.ndarray:
        """(n, d) matrix of the tokens' vectors."""
        if len(tokens) == 0:
            return np.zeros((0, self.dim), dtype=np.float64)
        return np.stack([self.get(t) for t in tokens])

    def embed_sentence(self, text: str) -> np.ndarray:
        """Unit-norm mean of token vectors; the zero vector marks empty input."""
        return self.embed_token_list(tokenize(text))

    def embed_token_list(self, tokens) -> np.ndarray:
        if len(tokens) == 0:
            return np.zeros(self.dim, dtype=np.float64)
        mean = self.embed_tokens(list(tokens)).mean(axis=0)
        n = np.linalg.norm(mean)
        if n < 1e-12:
            return np.zeros(self.dim, dtype=np.float64)
        return mean / n


def is_empty_vector(v: np.ndarray) -> bool:
    return bool(np.all(v == 0.0))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Standard cosine; defined as 0 when either vector is zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ContractError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def load_word_vectors(path: str | Path, oov_salt: int = 0) -> WordVectorTable:
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            token, floats = parts[0], parts[1:]
            if dim is None:
                dim = len(floats)
                if dim < 8:
                    raise ParseError(f"line {lineno}: dimension {dim} below minimum 8")
            if len(floats) != dim:
                raise ParseError(
                    f"line {lineno}: expected {dim} floats, found {len(floats)}"
                )
            try:
                vectors[token] = np.array([float(x) for x in floats], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad float ({exc})") from exc
    if dim is None:
        raise ParseError(f"empty word-vector file: {path}")
    return WordVectorTable(vectors, dim, oov_salt=oov_salt)


def save_word_vectors(table: WordVectorTable, path: str | Path) -> None:
    """Serialize sorted by token with fixed float formatting (byte stable)."""
    with open(path, "w", encoding="utf-8") as fh:
        for token in sorted(table.vectors):
            vals = " ".join(f"{x:.8f}" for x in table.vectors[token])
            fh.write(f"{token} {vals}\n")


def build_fixture_vectors(
    token_categories: dict[str, str], dim: int = 50, seed: int = 0, category_weight: float = 0.6
) -> WordVectorTable:
    """Vectors for a synthetic vocabulary: category centroid plus token noise.

    Tokens mapped to "" are background and get pure hash vectors, so semantic
    similarity reflects the category structure the corpus generator planted.
    """
    vectors: dict[str, np.ndarray] = {}
    for token in sorted(token_categories):
        cat = token_categories[token]
        noise = hash_unit_vector(token, dim, salt=seed)
        if cat:
            centroid = hash_unit_vector(f"category::{cat}", dim, salt=seed)
            v = category_weight * centroid + (1.0 - category_weight) * noise
        else:
            v = noise
        n = np.linalg.norm(v)
        vectors[token] = v / n
    return WordVectorTable(vectors, dim, oov_salt=seed)
