"""Corpus tokenization and tf-idf keyword extraction."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

DEFAULT_KEYWORDS_PER_DOC = 25
MIN_TOKEN_LENGTH = 2

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")


def tokenize(text: str, lowercase: bool = False) -> list[str]:
    """Split on non-alphanumeric boundaries, dropping single-character runs."""
    tokens = [t for t in _TOKEN_RE.findall(text) if len(t) >= MIN_TOKEN_LENGTH]
    if lowercase:
        tokens = [t.lower() for t in tokens]
    return tokens


class Corpus:
    """Ordered token streams with document-frequency statistics.

    Document ids are dense positions 0..size-1. ``source_names`` optionally
    records where each document came from (used as payload references).
    """

    def __init__(
        self,
        docs: Iterable[Sequence[str]],
        source_names: Sequence[str] | None = None,
    ):
        self.docs: list[list[str]] = [list(d) for d in docs]
        if source_names is not None and len(source_names) != len(self.docs):
            raise ValueError("source_names length does not match document count")
        self.source_names = list(source_names) if source_names is not None else None
        self.doc_freq: Counter[str] = Counter()
        for toks in self.docs:
            self.doc_freq.update(set(toks))

    @property
    def size(self) -> int:
        return len(self.docs)

    def tokens(self, doc_id: int) -> list[str]:
        return self.docs[doc_id]

    @classmethod
    def from_texts(cls, texts: Iterable[str], lowercase: bool = False) -> "Corpus":
        return cls([tokenize(t, lowercase) for t in texts])

    @classmethod
    def from_directory(cls, path: str | Path, lowercase: bool = False) -> "Corpus":
        """One document per plain-text file, doc ids assigned by filename order."""
        path = Path(path)
        if not path.is_dir():
            raise NotADirectoryError(f"corpus path {path} is not a directory")
        files = sorted(p for p in path.iterdir() if p.is_file())
        texts = [p.read_text(encoding="utf-8", errors="replace") for p in files]
        return cls([tokenize(t, lowercase) for t in texts], [p.name for p in files])


@dataclass(frozen=True)
class KeywordSet:
    """Per-document keywords ordered by descending tf-idf weight."""

    doc_id: int
    entries: tuple[tuple[str, float], ...]

    @property
    def terms(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def extract_keywords(corpus: Corpus, doc_id: int, m: int = DEFAULT_KEYWORDS_PER_DOC) -> KeywordSet:
    """Top-m terms of a document by tf * ln(N/df).

    tf is the raw in-document count. Ties break lexicographically
    ascending. Terms occurring in every document carry no ranking signal
    and are excluded unless nothing else remains. A document with no
    tokens yields an empty set, marking it unindexable.
    """
    if not 0 <= doc_id < corpus.size:
        raise ValueError(f"doc_id {doc_id} outside corpus of {corpus.size} documents")
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    toks = corpus.docs[doc_id]
    if not toks:
        return KeywordSet(doc_id, ())
    n_docs = corpus.size
    scored: list[tuple[str, float]] = []
    flat: list[tuple[str, float]] = []
    for term, tf in Counter(toks).items():
        df = corpus.doc_freq[term]
        weight = tf * math.log(n_docs / df)
        (flat if df == n_docs else scored).append((term, weight))
    pool = scored if scored else flat
    pool.sort(key=lambda e: (-e[1], e[0]))
    return KeywordSet(doc_id, tuple(pool[:m]))
