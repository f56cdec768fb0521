"""Fixed-dimension word vector storage.

Vectors live in one of two spaces: the model's input projections (IN) and,
when available, its output projections (OUT). Files use the word2vec text
layout: a ``<count> <dim>`` header line followed by one ``word v1 .. vdim``
line per entry. Stores are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import hashlib
import logging
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import EmbeddingFormatError

logger = logging.getLogger(__name__)

# Vectors whose norm falls below this are treated as the zero vector.
ZERO_NORM_FLOOR = 1e-9


class EmbeddingSide(Enum):
    """Which projection matrix a vector comes from."""

    IN = "in"
    OUT = "out"


class EmbeddingStore:
    """Word -> vector mapping for one or both embedding sides.

    All vectors share one dimension and are stored read-only. Lookups are
    exact string matches; a miss returns ``None`` rather than raising.
    """

    def __init__(self, dimension: int):
        if dimension <= 0:
            raise EmbeddingFormatError(f"dimension must be positive, got {dimension}")
        self.dimension = int(dimension)
        self.duplicates = 0
        self._sides: dict[EmbeddingSide, dict[str, np.ndarray]] = {}
        self._unit_caches: dict[EmbeddingSide, tuple[dict[str, int], np.ndarray]] = {}

    # -- construction -------------------------------------------------

    def _put(self, side: EmbeddingSide, word: str, vec: np.ndarray) -> bool:
        """Store a vector; returns False when the word was already present."""
        table = self._sides.setdefault(side, {})
        if word in table:  # first occurrence wins
            self.duplicates += 1
            return False
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.dimension,):
            raise EmbeddingFormatError(
                f"vector for {word!r} has {vec.size} components, expected {self.dimension}"
            )
        if float(np.linalg.norm(vec)) < ZERO_NORM_FLOOR:
            raise EmbeddingFormatError(f"zero vector for word {word!r}")
        vec.setflags(write=False)
        table[word] = vec
        self._unit_caches.pop(side, None)
        return True

    # -- queries ------------------------------------------------------

    @property
    def dual_available(self) -> bool:
        return EmbeddingSide.OUT in self._sides

    @property
    def size(self) -> int:
        """Vocabulary size of the primary (IN, if present) side."""
        if EmbeddingSide.IN in self._sides:
            return len(self._sides[EmbeddingSide.IN])
        return len(next(iter(self._sides.values()), {}))

    def has_side(self, side: EmbeddingSide) -> bool:
        return side in self._sides

    def words(self, side: EmbeddingSide = EmbeddingSide.IN) -> list[str]:
        return list(self._table(side).keys())

    def _table(self, side: EmbeddingSide) -> dict[str, np.ndarray]:
        if side not in self._sides:
            if side is EmbeddingSide.OUT:
                raise EmbeddingFormatError("OUT vectors requested but none are loaded")
            raise EmbeddingFormatError(f"no {side.value.upper()} vectors loaded")
        return self._sides[side]

    def lookup(self, word: str, side: EmbeddingSide = EmbeddingSide.IN) -> np.ndarray | None:
        """Exact-match lookup; returns None on a miss."""
        return self._table(side).get(word)

    def unit_rows(self, side: EmbeddingSide = EmbeddingSide.IN) -> tuple[dict[str, int], np.ndarray]:
        """Word -> row map plus the unit-normalized vector matrix for one side.

        Built lazily and cached so aggregations gather rows instead of
        normalizing per call; cost per query term is then one dict lookup.
        """
        cache = self._unit_caches.get(side)
        if cache is None:
            table = self._table(side)
            words = list(table)
            mat = np.array([table[w] for w in words])
            mat /= np.linalg.norm(mat, axis=1)[:, None]
            mat.setflags(write=False)
            cache = ({w: i for i, w in enumerate(words)}, mat)
            self._unit_caches[side] = cache
        return cache

    def resolve_side(self, side: EmbeddingSide) -> EmbeddingSide:
        """Map a requested side to one that is actually loaded.

        OUT falls back to IN when no OUT vectors exist; callers that care
        should compare the result against the request and record the
        fallback in their run metadata.
        """
        if side is EmbeddingSide.OUT and not self.dual_available:
            return EmbeddingSide.IN
        return side


def _parse_header(line: str, path: Path) -> tuple[int, int]:
    parts = line.split()
    if len(parts) != 2:
        raise EmbeddingFormatError(f"{path}: malformed header {line!r}")
    try:
        count, dim = int(parts[0]), int(parts[1])
    except ValueError:
        raise EmbeddingFormatError(f"{path}: malformed header {line!r}") from None
    if dim <= 0:
        raise EmbeddingFormatError(f"{path}: dimension must be positive, got {dim}")
    if count < 0:
        raise EmbeddingFormatError(f"{path}: negative entry count {count}")
    return count, dim


def _read_entries(path: Path, lowercase: bool) -> tuple[int, list[tuple[str, np.ndarray]]]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise EmbeddingFormatError(f"{path}: empty file")
        count, dim = _parse_header(header, path)
        entries: list[tuple[str, np.ndarray]] = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected word + {dim} scalars, got {len(parts)} fields"
                )
            word = parts[0].lower() if lowercase else parts[0]
            try:
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric component") from None
            entries.append((word, vec))
    if len(entries) != count:
        raise EmbeddingFormatError(
            f"{path}: header declares {count} entries but file has {len(entries)}"
        )
    return dim, entries


def load_text(
    path: str | Path,
    side: EmbeddingSide = EmbeddingSide.IN,
    lowercase: bool = False,
) -> EmbeddingStore:
    """Load a word2vec-format text file into a fresh store.

    Duplicate words keep their first occurrence; the number of dropped
    duplicates is recorded on the store and logged.
    """
    path = Path(path)
    dim, entries = _read_entries(path, lowercase)
    store = EmbeddingStore(dim)
    for word, vec in entries:
        store._put(side, word, vec)
    if store.duplicates:
        logger.warning("%s: dropped %d duplicate words (first kept)", path, store.duplicates)
    return store


def attach_text(
    store: EmbeddingStore,
    path: str | Path,
    side: EmbeddingSide,
    lowercase: bool = False,
) -> None:
    """Load a second file (typically the OUT vectors) into an existing store.

    The vocabulary need not match the already-loaded side, but the
    dimension must.
    """
    path = Path(path)
    dim, entries = _read_entries(path, lowercase)
    if dim != store.dimension:
        raise EmbeddingFormatError(
            f"{path}: dimension {dim} does not match store dimension {store.dimension}"
        )
    before = store.duplicates
    for word, vec in entries:
        store._put(side, word, vec)
    added = store.duplicates - before
    if added:
        logger.warning("%s: dropped %d duplicate words (first kept)", path, added)


def _word_stream(seed: int, word: str, salt: int) -> np.random.Generator:
    digest = hashlib.sha256(word.encode("utf-8")).digest()
    entropy = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(np.random.SeedSequence([int(seed), entropy, salt]))


def synthesize(
    n: int,
    vocab: Iterable[str],
    seed: int,
    dual: bool = False,
) -> EmbeddingStore:
    """Deterministic synthetic store for tests and demos.

    Each vector is drawn from a stream keyed by (seed, word), so the result
    is independent of vocabulary order and bit-identical across runs with
    the same seed. Components are standard normal; a draw whose norm falls
    below the zero floor is redrawn. With ``dual`` set, an OUT vector is
    generated for every word from a distinct stream.
    """
    if n < 1:
        raise EmbeddingFormatError(f"dimension must be positive, got {n}")
    vocab = list(vocab)
    if not vocab:
        raise EmbeddingFormatError("vocabulary must be non-empty")
    store = EmbeddingStore(n)
    sides = [(EmbeddingSide.IN, 0)] + ([(EmbeddingSide.OUT, 1)] if dual else [])
    for word in vocab:
        for side, salt in sides:
            rng = _word_stream(seed, word, salt)
            vec = rng.standard_normal(n)
            while float(np.linalg.norm(vec)) < ZERO_NORM_FLOOR:
                vec = rng.standard_normal(n)
            store._put(side, word, vec)
    return store


def save_text(
    store: EmbeddingStore,
    path: str | Path,
    side: EmbeddingSide = EmbeddingSide.IN,
) -> None:
    """Write one side of a store in the word2vec text format.

    Scalars are written with shortest round-trip repr, so load_text
    recovers them bit-for-bit.
    """
    table = store._table(side)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {store.dimension}\n")
        for word, vec in table.items():
            fh.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def nearest_words(
    store: EmbeddingStore,
    word: str,
    k: int = 10,
    side: EmbeddingSide = EmbeddingSide.IN,
) -> list[tuple[str, float]]:
    """Top-k vocabulary words by cosine similarity to ``word``.

    The query word itself is excluded. Ties break lexicographically.
    Raises KeyError when the word is not in the vocabulary.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    base = store.lookup(word, side)
    if base is None:
        raise KeyError(word)
    table = store._table(side)
    words = [w for w in table if w != word]
    if not words:
        return []
    mat = np.array([table[w] for w in words])
    sims = mat @ base / (np.linalg.norm(mat, axis=1) * np.linalg.norm(base))
    ranked = sorted(zip(words, sims), key=lambda e: (-e[1], e[0]))
    return [(w, float(s)) for w, s in ranked[:k]]
