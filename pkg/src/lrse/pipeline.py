"""Owner- and user-side glue: corpus to encrypted index, query to trapdoor,
and the plaintext ranking the verification suites compare against."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import core
from .core import BlindingSecret, SecretKey, Trapdoor
from .embeddings import EmbeddingSide, EmbeddingStore
from .engine import IndexStore, rank_top_k
from .errors import UnindexableDocument
from .text_analysis import DEFAULT_KEYWORDS_PER_DOC, Corpus, extract_keywords


@dataclass
class BuildReport:
    """What happened while indexing a corpus."""

    indexed: int = 0
    skipped_docs: list[int] = field(default_factory=list)
    missing_keywords: int = 0
    doc_side: str = EmbeddingSide.IN.value
    side_fallback: bool = False

    def as_meta(self) -> dict:
        return {
            "doc_side": self.doc_side,
            "side_fallback": self.side_fallback,
            "skipped_docs": self.skipped_docs,
            "missing_keywords": self.missing_keywords,
        }


def doc_rng(master_seed: int, doc_id: int) -> np.random.Generator:
    """Per-document stream so indexing parallelizes without losing determinism."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(doc_id)]))


def build_index(
    corpus: Corpus,
    store: EmbeddingStore,
    key: SecretKey,
    *,
    sigma: float = 0.0,
    keywords_per_doc: int = DEFAULT_KEYWORDS_PER_DOC,
    seed: int = 0,
    doc_side: EmbeddingSide | None = None,
    payload_refs: dict[int, str] | None = None,
) -> tuple[IndexStore, BuildReport]:
    """Extract keywords, embed, extend with noise, and encrypt every document.

    Documents with no resolvable keywords are skipped and reported rather
    than failing the build. The document side defaults to OUT vectors when
    the store has them, falling back to IN otherwise; the report records
    which side was actually used.
    """
    if store.dimension != key.embed_dim:
        raise ValueError(
            f"store dimension {store.dimension} does not match key dimension {key.embed_dim}"
        )
    requested = doc_side if doc_side is not None else core.default_sides(store)[0]
    effective = store.resolve_side(requested)
    report = BuildReport(
        doc_side=effective.value,
        side_fallback=(requested is EmbeddingSide.OUT and effective is EmbeddingSide.IN),
    )
    if payload_refs is None and corpus.source_names is not None:
        payload_refs = dict(enumerate(corpus.source_names))
    entries = []
    refs: dict[int, str] = {}
    missed: list[str] = []
    for doc_id in range(corpus.size):
        ks = extract_keywords(corpus, doc_id, keywords_per_doc)
        try:
            emb = core.doc_embedding(ks.terms, store, effective, missed=missed)
        except UnindexableDocument:
            report.skipped_docs.append(doc_id)
            continue
        rng = doc_rng(seed, doc_id)
        plain = core.extend_index_vector(emb, sigma, rng, doc_id=doc_id)
        entries.append(core.encrypt_index(plain, key, rng))
        if payload_refs and doc_id in payload_refs:
            refs[doc_id] = payload_refs[doc_id]
    report.indexed = len(entries)
    report.missing_keywords = len(missed)
    return IndexStore(key.embed_dim, entries, refs), report


def make_trapdoor(
    terms: Sequence[str],
    store: EmbeddingStore,
    key: SecretKey,
    *,
    seed: int = 0,
    query_side: EmbeddingSide = EmbeddingSide.IN,
    normalize_query: bool = False,
    query_id: int = 0,
) -> tuple[Trapdoor, BlindingSecret, int]:
    """Blind, extend, and encrypt a multi-keyword query.

    Returns the trapdoor, the blinding secret the caller must keep to
    unblind scores, and the number of query terms that missed the
    vocabulary.
    """
    if store.dimension != key.embed_dim:
        raise ValueError(
            f"store dimension {store.dimension} does not match key dimension {key.embed_dim}"
        )
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(query_id)]))
    blinding = BlindingSecret.generate(rng)
    missed: list[str] = []
    q = core.query_embedding(
        terms, store, store.resolve_side(query_side), normalize=normalize_query, missed=missed
    )
    qext = core.extend_query_vector(q, blinding)
    td = core.encrypt_trapdoor(qext, key, rng, query_id=query_id)
    return td, blinding, len(missed)


def doc_embedding_matrix(
    corpus: Corpus,
    store: EmbeddingStore,
    *,
    keywords_per_doc: int = DEFAULT_KEYWORDS_PER_DOC,
    doc_side: EmbeddingSide = EmbeddingSide.IN,
) -> tuple[np.ndarray, np.ndarray]:
    """Plaintext document embeddings, skipping unindexable documents the
    same way build_index does. Returns (doc_ids, row matrix)."""
    ids = []
    rows = []
    side = store.resolve_side(doc_side)
    for doc_id in range(corpus.size):
        ks = extract_keywords(corpus, doc_id, keywords_per_doc)
        try:
            rows.append(core.doc_embedding(ks.terms, store, side))
        except UnindexableDocument:
            continue
        ids.append(doc_id)
    if not ids:
        return np.empty(0, dtype=np.int64), np.empty((0, store.dimension))
    return np.array(ids, dtype=np.int64), np.stack(rows)


def plain_ranking(
    doc_ids: np.ndarray,
    doc_matrix: np.ndarray,
    query_terms: Sequence[str],
    store: EmbeddingStore,
    k: int,
    *,
    query_side: EmbeddingSide = EmbeddingSide.IN,
    normalize_query: bool = False,
) -> list[tuple[int, float]]:
    """Unencrypted reference ranking with the shared tie rule."""
    q = core.query_embedding(
        query_terms, store, store.resolve_side(query_side), normalize=normalize_query
    )
    return rank_top_k(doc_ids, doc_matrix @ q, k)
