"""Timing harness comparing embedding-dimension and dictionary-dimension cost.

Reproduces the scaling trends of the two schemes on synthetic data: index
build versus vector dimension and document count, trapdoor generation
versus dimension and query size, and query execution versus dimension.
Emits one CSV row per (scheme, phase, dimension, doc_count, seconds) plus
rendered figures alongside the CSV.
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from statistics import median

import numpy as np

from . import core, linalg, mrse
from .core import BlindingSecret, SecretKey
from .embeddings import EmbeddingStore, synthesize
from .engine import IndexStore, execute_query

logger = logging.getLogger(__name__)

BENCH_VOCAB = 600


@dataclass(frozen=True)
class BenchRow:
    scheme: str
    phase: str
    dimension: int
    doc_count: int
    seconds: float


@dataclass
class BenchConfig:
    lrse_dims: tuple[int, ...] = (50, 100, 200, 300)
    mrse_dims: tuple[int, ...] = (2000, 4000)
    doc_counts: tuple[int, ...] = (200, 500, 1000)
    main_docs: int = 1000
    keywords_per_doc: int = 25
    query_terms: int = 25
    top_k: int = 50
    trapdoor_reps: int = 200
    query_reps: int = 20
    seed: int = 0
    schemes: tuple[str, ...] = ("lrse", "mrse")


def _keyword_sets(vocab: list[str], docs: int, per_doc: int, seed: int) -> list[list[str]]:
    rng = np.random.default_rng(np.random.SeedSequence([seed, 77]))
    arr = np.array(vocab)
    per_doc = min(per_doc, len(vocab))
    return [
        [str(w) for w in rng.choice(arr, size=per_doc, replace=False)] for _ in range(docs)
    ]


def _bench_key(dim: int, seed: int) -> SecretKey:
    return core.gen_key(dim, seed, cond_max=linalg.scaled_cond_max(dim + core.EXTRA_DIMS))


class _LrseSetup:
    """Store, key, and keyword sets for one embedding dimension."""

    def __init__(self, n: int, docs: int, keywords_per_doc: int, seed: int):
        vocab = [f"word{i:04d}" for i in range(BENCH_VOCAB)]
        self.store: EmbeddingStore = synthesize(n, vocab, seed)
        self.vocab = vocab
        self.key = _bench_key(n, seed)
        self.keyword_sets = _keyword_sets(vocab, docs, keywords_per_doc, seed)
        self.n = n

    def build_entries(self, docs: int) -> list[core.EncryptedSubindex]:
        out = []
        for doc_id in range(docs):
            rng = np.random.default_rng(np.random.SeedSequence([0, doc_id]))
            emb = core.doc_embedding(self.keyword_sets[doc_id], self.store)
            plain = core.extend_index_vector(emb, 0.05, rng, doc_id=doc_id)
            out.append(core.encrypt_index(plain, self.key, rng))
        return out


class _MrseSetup:
    """Dictionary, key, and keyword sets for one dictionary size."""

    def __init__(self, w: int, docs: int, keywords_per_doc: int, seed: int):
        words = [f"dict{i:05d}" for i in range(w)]
        self.dictionary = mrse.Dictionary(tuple(words))
        self.key = _bench_key(w, seed)
        self.keyword_sets = _keyword_sets(words, docs, keywords_per_doc, seed)
        self.words = words
        self.w = w

    def build_entries(self, docs: int) -> list[core.EncryptedSubindex]:
        out = []
        for doc_id in range(docs):
            rng = np.random.default_rng(np.random.SeedSequence([0, doc_id]))
            vec = mrse.binary_doc_vector(self.keyword_sets[doc_id], self.dictionary)
            plain = core.extend_index_vector(vec, 0.05, rng, doc_id=doc_id)
            out.append(core.encrypt_index(plain, self.key, rng))
        return out


def time_index_build(setup, docs: int) -> float:
    """Seconds to encrypt ``docs`` documents, setup excluded."""
    t0 = time.perf_counter()
    setup.build_entries(docs)
    return time.perf_counter() - t0


def _one_lrse_trapdoor(setup: _LrseSetup, terms: list[str], rng) -> core.Trapdoor:
    blinding = BlindingSecret.generate(rng)
    q = core.query_embedding(terms, setup.store)
    return core.encrypt_trapdoor(core.extend_query_vector(q, blinding), setup.key, rng)


def _one_mrse_trapdoor(setup: _MrseSetup, terms: list[str], rng) -> core.Trapdoor:
    blinding = BlindingSecret.generate(rng)
    q = mrse.binary_query_vector(terms, setup.dictionary)
    return core.encrypt_trapdoor(core.extend_query_vector(q, blinding), setup.key, rng)


def time_trapdoor(setup, terms: list[str], reps: int, batches: int = 5) -> float:
    """Median per-trapdoor seconds over several timed batches."""
    make = _one_lrse_trapdoor if isinstance(setup, _LrseSetup) else _one_mrse_trapdoor
    rng = np.random.default_rng(12345)
    make(setup, terms, rng)  # warm caches before timing
    samples = []
    for _ in range(batches):
        t0 = time.perf_counter()
        for _ in range(reps):
            make(setup, terms, rng)
        samples.append((time.perf_counter() - t0) / reps)
    return median(samples)


def time_query(index: IndexStore, td: core.Trapdoor, k: int, reps: int) -> float:
    execute_query(index, td, k)  # warm
    t0 = time.perf_counter()
    for _ in range(reps):
        execute_query(index, td, k)
    return (time.perf_counter() - t0) / reps


def run(config: BenchConfig) -> list[BenchRow]:
    """Execute every configured phase and return the timing rows."""
    rows: list[BenchRow] = []
    doc_counts = sorted(set(config.doc_counts) | {config.main_docs})
    max_docs = max(doc_counts)
    for scheme in config.schemes:
        dims = config.lrse_dims if scheme == "lrse" else config.mrse_dims
        setup_cls = _LrseSetup if scheme == "lrse" else _MrseSetup
        for dim in dims:
            logger.info("bench: %s dim=%d setup", scheme, dim)
            setup = setup_cls(dim, max_docs, config.keywords_per_doc, config.seed)
            seconds = time_index_build(setup, config.main_docs)
            rows.append(BenchRow(scheme, "index", dim, config.main_docs, seconds))
            if dim == max(dims):  # document sweep at the largest dimension
                for docs in doc_counts:
                    if docs == config.main_docs:
                        continue
                    rows.append(
                        BenchRow(scheme, "index", dim, docs, time_index_build(setup, docs))
                    )
            terms = setup.keyword_sets[0][: config.query_terms]
            per_td = time_trapdoor(setup, terms, config.trapdoor_reps)
            rows.append(BenchRow(scheme, "trapdoor", dim, config.main_docs, per_td))
            index = IndexStore(dim, setup.build_entries(config.main_docs))
            rng = np.random.default_rng(1)
            td = (
                _one_lrse_trapdoor(setup, terms, rng)
                if scheme == "lrse"
                else _one_mrse_trapdoor(setup, terms, rng)
            )
            per_q = time_query(index, td, config.top_k, config.query_reps)
            rows.append(BenchRow(scheme, "query", dim, config.main_docs, per_q))
    return rows


def write_csv(rows: list[BenchRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scheme", "phase", "dimension", "doc_count", "seconds"])
        for r in rows:
            writer.writerow([r.scheme, r.phase, r.dimension, r.doc_count, f"{r.seconds:.6g}"])


def render_figures(rows: list[BenchRow], out_dir: str | Path) -> list[Path]:
    """Render one figure per trend next to the CSV; returns the file paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    main_docs = max((r.doc_count for r in rows if r.phase == "index"), default=0)
    written = []

    def plot_vs_dimension(phase: str, filename: str, title: str):
        fig, ax = plt.subplots(figsize=(6, 4))
        plotted = False
        for scheme, marker in (("lrse", "o"), ("mrse", "s")):
            pts = sorted(
                (r.dimension, r.seconds)
                for r in rows
                if r.scheme == scheme and r.phase == phase and r.doc_count == main_docs
            )
            if pts:
                ax.loglog(*zip(*pts), marker=marker, label=scheme.upper())
                plotted = True
        if not plotted:
            plt.close(fig)
            return
        ax.set_xlabel("vector dimension")
        ax.set_ylabel("seconds")
        ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        path = out_dir / filename
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    plot_vs_dimension("index", "index_time_vs_dimension.png",
                      f"Index build time, {main_docs} documents")
    plot_vs_dimension("trapdoor", "trapdoor_time_vs_dimension.png", "Trapdoor generation time")
    plot_vs_dimension("query", "query_time_vs_dimension.png",
                      f"Query time, {main_docs} documents")

    fig, ax = plt.subplots(figsize=(6, 4))
    plotted = False
    for scheme, marker in (("lrse", "o"), ("mrse", "s")):
        dims = [r.dimension for r in rows if r.scheme == scheme and r.phase == "index"]
        if not dims:
            continue
        top = max(dims)
        pts = sorted(
            (r.doc_count, r.seconds)
            for r in rows
            if r.scheme == scheme and r.phase == "index" and r.dimension == top
        )
        if len(pts) > 1:
            ax.plot(*zip(*pts), marker=marker, label=f"{scheme.upper()} (dim {top})")
            plotted = True
    if plotted:
        ax.set_xlabel("documents")
        ax.set_ylabel("seconds")
        ax.set_title("Index build time vs corpus size")
        ax.grid(True, alpha=0.3)
        ax.legend()
        path = out_dir / "index_time_vs_documents.png"
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        written.append(path)
    plt.close(fig)
    return written


def summarize(rows: list[BenchRow]) -> str:
    lines = []
    by_phase: dict[str, list[BenchRow]] = {}
    for r in rows:
        by_phase.setdefault(r.phase, []).append(r)
    for phase in ("index", "trapdoor", "query"):
        for r in sorted(by_phase.get(phase, []), key=lambda r: (r.scheme, r.dimension, r.doc_count)):
            lines.append(
                f"{r.scheme:>5} {phase:<8} dim={r.dimension:<6} docs={r.doc_count:<6} "
                f"{r.seconds:.6f} s"
            )
    lrse = {r.dimension: r.seconds for r in by_phase.get("index", []) if r.scheme == "lrse"}
    mrse_rows = {r.dimension: r.seconds for r in by_phase.get("index", []) if r.scheme == "mrse"}
    if lrse and mrse_rows:
        best_l = min(lrse.items(), key=lambda e: e[1])
        worst_m = max(mrse_rows.items(), key=lambda e: e[1])
        ratio = worst_m[1] / best_l[1] if best_l[1] > 0 else float("inf")
        lines.append(
            f"index build: embedding dim {best_l[0]} is {ratio:.1f}x faster than "
            f"dictionary dim {worst_m[0]}"
        )
    return "\n".join(lines)


# -- trend checks used by the acceptance suite --------------------------------


def index_build_speed_ratio(
    n: int = 100, w: int = 4000, docs: int = 1000, keywords_per_doc: int = 25, seed: int = 0
) -> tuple[float, float]:
    """(embedding-scheme seconds, dictionary-scheme seconds) for one build."""
    lrse_setup = _LrseSetup(n, docs, keywords_per_doc, seed)
    lrse_s = time_index_build(lrse_setup, docs)
    mrse_setup = _MrseSetup(w, docs, keywords_per_doc, seed)
    mrse_s = time_index_build(mrse_setup, docs)
    return lrse_s, mrse_s


def trapdoor_keyword_sensitivity(
    n: int = 100,
    keyword_counts: tuple[int, int] = (10, 50),
    reps: int = 400,
    rounds: int = 9,
    seed: int = 0,
) -> tuple[float, float, float]:
    """Per-trapdoor seconds at each query size and their relative difference.

    Batches for the two sizes are interleaved so clock-frequency drift
    cancels out of the comparison; the medians over rounds are compared.
    """
    setup = _LrseSetup(n, 1, 25, seed)
    lo, hi = keyword_counts
    terms_lo = setup.vocab[:lo]
    terms_hi = setup.vocab[:hi]
    rng = np.random.default_rng(12345)
    for _ in range(reps):  # warm caches and the allocator before timing
        _one_lrse_trapdoor(setup, terms_lo, rng)
        _one_lrse_trapdoor(setup, terms_hi, rng)
    samples_lo = []
    samples_hi = []

    def batch(terms):
        t0 = time.perf_counter()
        for _ in range(reps):
            _one_lrse_trapdoor(setup, terms, rng)
        return (time.perf_counter() - t0) / reps

    for r in range(rounds):  # alternate order so drift hits both sizes equally
        if r % 2 == 0:
            samples_lo.append(batch(terms_lo))
            samples_hi.append(batch(terms_hi))
        else:
            samples_hi.append(batch(terms_hi))
            samples_lo.append(batch(terms_lo))
    # scheduler noise only ever inflates a batch, so compare the cleanest runs
    t_lo = min(samples_lo)
    t_hi = min(samples_hi)
    rel = abs(t_hi - t_lo) / min(t_lo, t_hi)
    return t_lo, t_hi, rel
