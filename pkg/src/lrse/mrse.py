"""Dictionary-based binary-vector baseline.

Documents and queries become occurrence vectors over a fixed keyword
dictionary and run through the identical extend/split/encrypt pipeline at
dimension W+2, so the unblinded score counts matching keywords. Exists to
make the dimension-driven cost comparison reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from . import core
from .core import BlindingSecret, SecretKey
from .text_analysis import Corpus


@dataclass(frozen=True)
class Dictionary:
    """Ordered, duplicate-free keyword list defining the vector layout."""

    words: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.words)) != len(self.words):
            raise ValueError("dictionary contains duplicate words")

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.words)}

    @property
    def size(self) -> int:
        return len(self.words)

    @classmethod
    def from_corpus(cls, corpus: Corpus, size: int) -> "Dictionary":
        """Top-``size`` corpus terms by document frequency, stored sorted."""
        if size < 1:
            raise ValueError(f"dictionary size must be at least 1, got {size}")
        ranked = sorted(corpus.doc_freq.items(), key=lambda e: (-e[1], e[0]))
        return cls(tuple(sorted(w for w, _ in ranked[:size])))

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(sorted(self.words)) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Dictionary":
        words = [w for w in Path(path).read_text(encoding="utf-8").splitlines() if w]
        return cls(tuple(words))


def binary_doc_vector(terms: Sequence[str], dictionary: Dictionary) -> np.ndarray:
    """1.0 where a dictionary word appears among the terms, else 0.0."""
    vec = np.zeros(dictionary.size)
    pos = dictionary._positions
    for t in set(terms):
        i = pos.get(t)
        if i is not None:
            vec[i] = 1.0
    return vec


def binary_query_vector(terms: Sequence[str], dictionary: Dictionary) -> np.ndarray:
    return binary_doc_vector(terms, dictionary)


def mrse_score(
    doc_vec: np.ndarray,
    query_vec: np.ndarray,
    key: SecretKey,
    rng: np.random.Generator,
    sigma: float = 0.0,
    blinding: BlindingSecret = core.IDENTITY_BLINDING,
) -> float:
    """Run both binary vectors through the shared pipeline and score them.

    With identity blinding and sigma 0 the result is exactly the number of
    keywords the document and query share.
    """
    plain = core.extend_index_vector(doc_vec, sigma, rng)
    sub = core.encrypt_index(plain, key, rng)
    qext = core.extend_query_vector(query_vec, blinding)
    td = core.encrypt_trapdoor(qext, key, rng)
    return core.score(sub, td)
