"""Scheme core: key generation, vector preparation, split encryption, scoring.

The owner builds per-document subindexes by normalizing a keyword-embedding
centroid, appending a Gaussian noise slot and a constant slot, splitting the
result under a secret indicator vector, and mixing the halves through two
invertible matrices. The user builds trapdoors the complementary way with
the inverse matrices, after blinding the query with a positive scale and an
offset. The server's dot product of the two pairs then equals
scale * (relevance + noise) + offset, so ranking order is preserved while
repeated queries and repeated encryptions stay unlinkable.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from . import linalg
from .embeddings import EmbeddingSide, EmbeddingStore
from .errors import UnindexableDocument

# Every embedding is extended by a noise slot and a constant slot.
EXTRA_DIMS = 2

_CENTROID_NORM_FLOOR = 1e-12

SplitMode = Literal["index", "query"]


@dataclass(frozen=True, eq=False)
class SecretKey:
    """Split indicator plus the two mixing matrices with cached derivatives."""

    split_bits: np.ndarray  # (dim,) uint8; 1 = split on the index side
    mix1: np.ndarray
    mix2: np.ndarray
    mix1_t: np.ndarray
    mix2_t: np.ndarray
    mix1_inv: np.ndarray
    mix2_inv: np.ndarray
    embed_dim: int
    seed: int | None = None  # local audit metadata, not serialized

    @property
    def dim(self) -> int:
        return self.embed_dim + EXTRA_DIMS


@dataclass(frozen=True, eq=False)
class PlainIndexVector:
    """Extended plaintext document vector (embedding..., noise, 1)."""

    doc_id: int
    vec: np.ndarray
    noise: float
    sigma: float


@dataclass(frozen=True, eq=False)
class EncryptedSubindex:
    doc_id: int
    first: np.ndarray
    second: np.ndarray


@dataclass(frozen=True, eq=False)
class Trapdoor:
    first: np.ndarray
    second: np.ndarray
    query_id: int = 0


@dataclass(frozen=True)
class BlindingSecret:
    """Querier-held scale and offset; never serialized with the trapdoor.

    The scale must stay positive: the server score is affine in relevance,
    so a negative scale would reverse the returned ranking.
    """

    scale: float
    offset: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"blinding scale must be positive, got {self.scale}")

    @classmethod
    def generate(cls, rng: np.random.Generator) -> "BlindingSecret":
        return cls(scale=float(rng.uniform(0.5, 2.0)), offset=float(rng.uniform(-1.0, 1.0)))


IDENTITY_BLINDING = BlindingSecret(1.0, 0.0)


def gen_key(n: int, seed: int, cond_max: float = linalg.DEFAULT_COND_MAX) -> SecretKey:
    """Generate a secret key for embedding dimension n.

    The indicator bits are fair coin flips; the mixing matrices come from
    independent substreams of the same seed, so the key is deterministic
    in (n, seed, cond_max).
    """
    if n < 1:
        raise ValueError(f"embedding dimension must be at least 1, got {n}")
    d = n + EXTRA_DIMS
    ss_bits, ss_m1, ss_m2 = np.random.SeedSequence(seed).spawn(3)
    bits = np.random.default_rng(ss_bits).integers(0, 2, size=d, dtype=np.uint8)
    m1 = linalg.random_invertible(d, ss_m1, cond_max)
    m2 = linalg.random_invertible(d, ss_m2, cond_max)
    return SecretKey(
        split_bits=bits,
        mix1=m1,
        mix2=m2,
        mix1_t=np.ascontiguousarray(m1.T),
        mix2_t=np.ascontiguousarray(m2.T),
        mix1_inv=linalg.invert(m1),
        mix2_inv=linalg.invert(m2),
        embed_dim=n,
        seed=seed,
    )


def _resolve_unit_rows(
    words: Sequence[str],
    store: EmbeddingStore,
    side: EmbeddingSide,
    missed: list[str] | None,
) -> np.ndarray | None:
    if not words:
        return None
    positions, units = store.unit_rows(side)
    # fast path: every word resolves, gathered with one C-level call
    try:
        if len(words) == 1:
            idx: Sequence[int] = (positions[words[0]],)
        else:
            idx = operator.itemgetter(*words)(positions)
    except KeyError:
        idx = []
        for w in words:
            i = positions.get(w)
            if i is None:
                if missed is not None:
                    missed.append(w)
                continue
            idx.append(i)
        if not idx:
            return None
    return units.take(np.asarray(idx, dtype=np.intp), axis=0)


def doc_embedding(
    words: Sequence[str],
    store: EmbeddingStore,
    side: EmbeddingSide = EmbeddingSide.IN,
    missed: list[str] | None = None,
) -> np.ndarray:
    """Unit-normalized centroid of the unit keyword vectors.

    Out-of-vocabulary keywords are skipped (appended to ``missed`` when
    given). Raises UnindexableDocument when nothing resolves or the
    centroid collapses to zero.
    """
    units = _resolve_unit_rows(words, store, side, missed)
    if units is None:
        raise UnindexableDocument("no keyword resolves to a stored vector")
    centroid = units.mean(axis=0)
    norm = float(np.linalg.norm(centroid))
    if norm < _CENTROID_NORM_FLOOR:
        raise UnindexableDocument("keyword vectors cancel out to a degenerate centroid")
    return centroid / norm


def query_embedding(
    terms: Sequence[str],
    store: EmbeddingStore,
    side: EmbeddingSide = EmbeddingSide.IN,
    normalize: bool = False,
    missed: list[str] | None = None,
) -> np.ndarray:
    """Mean of the unit query-term vectors, deliberately not re-normalized.

    Unlike the document side, the plain mean is the scheme's query vector;
    ``normalize`` opts into cosine-style scoring instead. Duplicate terms
    contribute once per occurrence; the averaging count covers resolvable
    occurrences only.
    """
    units = _resolve_unit_rows(terms, store, side, missed)
    if units is None:
        raise UnindexableDocument("no query term resolves to a stored vector")
    q = units.mean(axis=0)
    if normalize:
        norm = float(np.linalg.norm(q))
        if norm < _CENTROID_NORM_FLOOR:
            raise UnindexableDocument("query vectors cancel out to a degenerate mean")
        q = q / norm
    return q


def extend_index_vector(
    vec: np.ndarray,
    sigma: float,
    rng: np.random.Generator,
    doc_id: int = 0,
) -> PlainIndexVector:
    """Append a Normal(0, sigma^2) noise slot and the constant 1 slot."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    vec = np.asarray(vec, dtype=np.float64)
    noise = float(rng.normal(0.0, sigma))
    return PlainIndexVector(
        doc_id=doc_id,
        vec=np.concatenate([vec, [noise, 1.0]]),
        noise=noise,
        sigma=sigma,
    )


def extend_query_vector(vec: np.ndarray, blinding: BlindingSecret) -> np.ndarray:
    """Scale the query vector and append (scale, offset)."""
    vec = np.asarray(vec, dtype=np.float64)
    return np.concatenate([blinding.scale * vec, [blinding.scale, blinding.offset]])


def split(
    vec: np.ndarray,
    split_bits: np.ndarray,
    mode: SplitMode,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Split a vector into a random-sum pair under the indicator bits.

    Index mode randomizes where the indicator is 1 and copies where it is
    0; query mode is the complement. Random halves are drawn uniformly on
    [-B, B] with B scaled to the vector's magnitude so later products stay
    well-conditioned; the other half is the complement to the original
    component.
    """
    vec = np.asarray(vec, dtype=np.float64)
    split_bits = np.asarray(split_bits)
    if vec.ndim != 1 or split_bits.shape != vec.shape:
        raise ValueError(
            f"dimension mismatch: vector {vec.shape}, indicator {split_bits.shape}"
        )
    if not np.all((split_bits == 0) | (split_bits == 1)):
        raise ValueError("split indicator components must be 0 or 1")
    if mode == "index":
        mask = split_bits == 1
    elif mode == "query":
        mask = split_bits == 0
    else:
        raise ValueError(f"mode must be 'index' or 'query', got {mode!r}")
    first = vec.copy()
    second = vec.copy()
    count = int(mask.sum())
    if count:
        bound = max(1.0, 2.0 * float(np.max(np.abs(vec))))
        draws = rng.uniform(-bound, bound, size=count)
        first[mask] = draws
        second[mask] = vec[mask] - draws
    return first, second


def encrypt_index(
    plain: PlainIndexVector,
    key: SecretKey,
    rng: np.random.Generator,
) -> EncryptedSubindex:
    """Split in index mode, then mix both halves through the transposes."""
    if plain.vec.shape != (key.dim,):
        raise ValueError(f"vector length {plain.vec.size} does not match key dim {key.dim}")
    d1, d2 = split(plain.vec, key.split_bits, "index", rng)
    return EncryptedSubindex(plain.doc_id, key.mix1_t @ d1, key.mix2_t @ d2)


def encrypt_trapdoor(
    qext: np.ndarray,
    key: SecretKey,
    rng: np.random.Generator,
    query_id: int = 0,
) -> Trapdoor:
    """Split in query mode, then mix both halves through the inverses."""
    qext = np.asarray(qext, dtype=np.float64)
    if qext.shape != (key.dim,):
        raise ValueError(f"vector length {qext.size} does not match key dim {key.dim}")
    q1, q2 = split(qext, key.split_bits, "query", rng)
    return Trapdoor(key.mix1_inv @ q1, key.mix2_inv @ q2, query_id)


def score(sub: EncryptedSubindex, td: Trapdoor) -> float:
    """Server-side similarity: the paired dot product of subindex and trapdoor."""
    if sub.first.shape != td.first.shape or sub.second.shape != td.second.shape:
        raise ValueError(
            f"dimension mismatch: subindex {sub.first.shape}, trapdoor {td.first.shape}"
        )
    return float(sub.first @ td.first + sub.second @ td.second)


def desm_plain(
    doc_keywords: Sequence[str],
    query_terms: Sequence[str],
    store: EmbeddingStore,
    sides: tuple[EmbeddingSide, EmbeddingSide] = (EmbeddingSide.IN, EmbeddingSide.IN),
    normalize_query: bool = False,
) -> float:
    """Plaintext relevance oracle: document centroid dotted with query mean."""
    d = doc_embedding(doc_keywords, store, sides[0])
    q = query_embedding(query_terms, store, sides[1], normalize=normalize_query)
    return float(d @ q)


def default_sides(store: EmbeddingStore) -> tuple[EmbeddingSide, EmbeddingSide]:
    """Document side prefers OUT vectors when available; query side stays IN."""
    doc = EmbeddingSide.OUT if store.dual_available else EmbeddingSide.IN
    return doc, EmbeddingSide.IN
