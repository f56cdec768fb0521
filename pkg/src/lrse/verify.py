"""Self-contained correctness checks for the whole scheme.

Each check returns a CheckResult and is independently runnable; `run_all`
executes the full battery. The CLI `verify` subcommand and the acceptance
test suite both call into this module so that a green verify run and a
green acceptance run mean the same thing.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import core, mrse
from .core import BlindingSecret
from .embeddings import synthesize
from .engine import (
    execute_query,
    serialize_index,
    serialize_key,
    serialize_trapdoor,
    deserialize_index,
    deserialize_key,
    deserialize_trapdoor,
)
from .errors import SerializationError
from . import linalg
from .pipeline import build_index, doc_embedding_matrix, make_trapdoor, plain_ranking
from .text_analysis import Corpus

REL_TOL = 1e-8

DEFAULT_SIGMAS = (0.0, 0.02, 0.05, 0.1, 0.2)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    elapsed: float
    data: dict = field(default_factory=dict)


def _finish(name: str, passed: bool, detail: str, t0: float, data: dict | None = None) -> CheckResult:
    return CheckResult(name, passed, detail, time.perf_counter() - t0, data or {})


def _rel_err(got: float, want: float) -> float:
    return abs(got - want) / (1.0 + abs(want))


def _synth_fixture(n: int, vocab_size: int, seed: int):
    vocab = [f"word{i:04d}" for i in range(vocab_size)]
    return vocab, synthesize(n, vocab, seed)


def _random_corpus(vocab, docs: int, rng: np.random.Generator,
                   min_tokens: int = 8, max_tokens: int = 30) -> Corpus:
    token_lists = []
    arr = np.array(vocab)
    for _ in range(docs):
        size = int(rng.integers(min_tokens, max_tokens + 1))
        token_lists.append([str(w) for w in rng.choice(arr, size=size, replace=True)])
    return Corpus(token_lists)


def _random_queries(vocab, count: int, rng: np.random.Generator,
                    min_terms: int = 3, max_terms: int = 8) -> list[list[str]]:
    arr = np.array(vocab)
    out = []
    for _ in range(count):
        size = int(rng.integers(min_terms, max_terms + 1))
        out.append([str(w) for w in rng.choice(arr, size=size, replace=False)])
    return out


# -- structural checks ------------------------------------------------------


def check_split_reconstruction(trials: int = 500, seed: int = 101) -> CheckResult:
    """Copy positions match bitwise; random positions reconstruct exactly.

    The complement half is one float subtraction from the original and the
    drawn half, so the oracle recomputes it and compares bit-for-bit.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(trials):
        d = int(rng.integers(1, 17))
        vec = rng.uniform(-3, 3, size=d) * float(rng.choice([0.01, 1.0, 100.0]))
        bits = rng.integers(0, 2, size=d, dtype=np.uint8)
        for mode in ("index", "query"):
            state = np.random.default_rng(int(rng.integers(0, 2**31)))
            first, second = core.split(vec, bits, mode, state)
            mask = (bits == 1) if mode == "index" else (bits == 0)
            bound = max(1.0, 2.0 * float(np.max(np.abs(vec))))
            ok = (
                np.array_equal(first[~mask], vec[~mask])
                and np.array_equal(second[~mask], vec[~mask])
                and np.array_equal(second[mask], vec[mask] - first[mask])
                and np.all(np.abs(first[mask]) <= bound)
            )
            failures += not ok
    return _finish(
        "split-reconstruction",
        failures == 0,
        f"{trials} random vectors x 2 modes, {failures} reconstruction failures",
        t0,
    )


def check_inner_product_preservation(
    instances: int = 10_000, dims: tuple[int, ...] = (6, 102), seed: int = 202
) -> CheckResult:
    """Mixing through transpose and inverse preserves dot products."""
    t0 = time.perf_counter()
    per_dim = instances // len(dims)
    worst = 0.0
    child = iter(np.random.SeedSequence(seed).spawn(len(dims) * 2))
    for d in dims:
        mat_seeds = np.random.default_rng(next(child)).integers(0, 2**31, size=per_dim)
        vec_rng = np.random.default_rng(next(child))
        for i in range(per_dim):
            m = linalg.random_invertible(d, int(mat_seeds[i]))
            m_inv = linalg.invert(m)
            a = vec_rng.standard_normal(d)
            b = vec_rng.standard_normal(d)
            a /= np.linalg.norm(a)
            b /= np.linalg.norm(b)
            got = float(linalg.mat_vec_T(m, a) @ (m_inv @ b))
            worst = max(worst, _rel_err(got, float(a @ b)))
    return _finish(
        "inner-product-preservation",
        worst <= REL_TOL,
        f"{instances} instances at d in {dims}, max rel err {worst:.3e}",
        t0,
    )


def check_score_identity(
    triples: int = 1000, n: int = 100, sigma: float = 0.05, seed: int = 303
) -> CheckResult:
    """Server score equals scale * (plain relevance + noise) + offset."""
    t0 = time.perf_counter()
    vocab, store = _synth_fixture(n, 80, seed)
    arr = np.array(vocab)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    key_seeds = rng.integers(0, 2**31, size=triples)
    worst = 0.0
    for i in range(triples):
        key = core.gen_key(n, int(key_seeds[i]))
        doc_terms = [str(w) for w in rng.choice(arr, size=int(rng.integers(5, 26)), replace=False)]
        query_terms = [str(w) for w in rng.choice(arr, size=int(rng.integers(1, 11)), replace=False)]
        enc_rng = np.random.default_rng(np.random.SeedSequence([seed, 2, i]))
        plain = core.extend_index_vector(core.doc_embedding(doc_terms, store), sigma, enc_rng, doc_id=i)
        sub = core.encrypt_index(plain, key, enc_rng)
        blinding = BlindingSecret.generate(enc_rng)
        qext = core.extend_query_vector(core.query_embedding(query_terms, store), blinding)
        td = core.encrypt_trapdoor(qext, key, enc_rng)
        got = core.score(sub, td)
        want = blinding.scale * (core.desm_plain(doc_terms, query_terms, store) + plain.noise)
        want += blinding.offset
        worst = max(worst, _rel_err(got, want))
    return _finish(
        "score-identity",
        worst <= REL_TOL,
        f"{triples} triples at n={n}, sigma={sigma}, max rel err {worst:.3e}",
        t0,
    )


def check_score_bounds(trials: int = 500, n: int = 64, seed: int = 404) -> CheckResult:
    """Unblinded noise-free scores stay within [-1, 1]."""
    t0 = time.perf_counter()
    vocab, store = _synth_fixture(n, 60, seed)
    arr = np.array(vocab)
    rng = np.random.default_rng(seed)
    key = core.gen_key(n, seed)
    worst = 0.0
    for i in range(trials):
        doc_terms = [str(w) for w in rng.choice(arr, size=int(rng.integers(1, 20)), replace=False)]
        query_terms = [str(w) for w in rng.choice(arr, size=int(rng.integers(1, 10)), replace=False)]
        enc_rng = np.random.default_rng(np.random.SeedSequence([seed, 3, i]))
        plain = core.extend_index_vector(core.doc_embedding(doc_terms, store), 0.0, enc_rng)
        sub = core.encrypt_index(plain, key, enc_rng)
        qext = core.extend_query_vector(core.query_embedding(query_terms, store), core.IDENTITY_BLINDING)
        td = core.encrypt_trapdoor(qext, key, enc_rng)
        worst = max(worst, abs(core.score(sub, td)))
    return _finish(
        "score-bounds",
        worst <= 1.0 + 1e-8,
        f"{trials} noise-free unblinded scores, max |score| = {worst:.6f}",
        t0,
    )


# -- ranking checks ----------------------------------------------------------


def _equivalence_fixture(n: int, docs: int, seed: int):
    vocab, store = _synth_fixture(n, 300, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 10]))
    corpus = _random_corpus(vocab, docs, rng)
    key = core.gen_key(n, seed + 7)
    return vocab, store, corpus, key


def check_rank_equivalence(
    docs: int = 100, queries: int = 50, n: int = 100, k: int = 50, seed: int = 505
) -> CheckResult:
    """Noise-free encrypted top-k ids equal the plaintext top-k ids exactly."""
    t0 = time.perf_counter()
    vocab, store, corpus, key = _equivalence_fixture(n, docs, seed)
    index, _ = build_index(corpus, store, key, sigma=0.0, seed=seed + 9)
    ids, matrix = doc_embedding_matrix(corpus, store)
    qrng = np.random.default_rng(np.random.SeedSequence([seed, 20]))
    mismatches = 0
    for qi, terms in enumerate(_random_queries(vocab, queries, qrng)):
        td, _, _ = make_trapdoor(terms, store, key, seed=seed + 100, query_id=qi)
        got = [doc_id for doc_id, _ in execute_query(index, td, k)]
        want = [doc_id for doc_id, _ in plain_ranking(ids, matrix, terms, store, k)]
        mismatches += got != want
    return _finish(
        "rank-equivalence-sigma0",
        mismatches == 0,
        f"{docs} docs x {queries} queries at n={n}, k={k}, {mismatches} mismatched rankings",
        t0,
    )


def check_trapdoor_rerandomization(count: int = 20, n: int = 100, seed: int = 606) -> CheckResult:
    """Independent trapdoors for one query differ in bytes but rank identically."""
    t0 = time.perf_counter()
    vocab, store, corpus, key = _equivalence_fixture(n, 20, seed)
    index, _ = build_index(corpus, store, key, sigma=0.05, seed=seed + 9)
    terms = vocab[:4]
    blobs = set()
    rankings = set()
    for i in range(count):
        td, _, _ = make_trapdoor(terms, store, key, seed=seed + 1000 + i)
        blobs.add(serialize_trapdoor(td))
        rankings.add(tuple(doc_id for doc_id, _ in execute_query(index, td, index.count)))
    passed = len(blobs) == count and len(rankings) == 1
    return _finish(
        "trapdoor-rerandomization",
        passed,
        f"{count} trapdoors: {len(blobs)} distinct byte strings, {len(rankings)} distinct rankings",
        t0,
    )


def check_index_rerandomization(count: int = 100, n: int = 100, seed: int = 707) -> CheckResult:
    """Re-encrypting one document never repeats a ciphertext pair."""
    t0 = time.perf_counter()
    vocab, store = _synth_fixture(n, 40, seed)
    key = core.gen_key(n, seed)
    ones = int(key.split_bits.sum())
    if ones < 10:
        return _finish(
            "index-rerandomization", False, f"indicator has only {ones} one-bits", t0
        )
    emb = core.doc_embedding(vocab[:12], store)
    blobs = set()
    for i in range(count):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 4, i]))
        plain = core.extend_index_vector(emb, 0.05, rng, doc_id=0)
        sub = core.encrypt_index(plain, key, rng)
        blobs.add(sub.first.tobytes() + sub.second.tobytes())
    return _finish(
        "index-rerandomization",
        len(blobs) == count,
        f"{count} re-encryptions ({ones} one-bits in indicator), {len(blobs)} distinct ciphertexts",
        t0,
    )


def check_payload_size_linearity(
    dims: tuple[int, ...] = (50, 100, 200, 300), seed: int = 808
) -> CheckResult:
    """Serialized subindex and trapdoor payloads hold exactly 2(n+2) scalars."""
    t0 = time.perf_counter()
    from .engine import _CRC, _DOC_ID, _HEADER  # sizes of the fixed container parts

    problems = []
    counts = {}
    for n in dims:
        vocab, store = _synth_fixture(n, 30, seed)
        key = core.gen_key(n, seed + n)
        corpus = Corpus([vocab[:6], vocab[3:9], vocab[6:12]])
        index, _ = build_index(corpus, store, key, sigma=0.05, seed=seed)
        blob = serialize_index(index)
        payload = len(blob) - _HEADER.size - _CRC.size
        per_doc = payload / index.count
        scalars = (per_doc - _DOC_ID.size) / 8
        td, _, _ = make_trapdoor(vocab[:3], store, key, seed=seed)
        td_scalars = (len(serialize_trapdoor(td)) - _HEADER.size - _CRC.size) / 8
        counts[n] = scalars
        if scalars != 2 * (n + 2) or td_scalars != 2 * (n + 2):
            problems.append(f"n={n}: subindex {scalars}, trapdoor {td_scalars}")
    # zero residual against the line 2*(n+2) through the origin in (n+2)
    residuals = [counts[n] - 2 * (n + 2) for n in dims]
    passed = not problems and all(r == 0 for r in residuals)
    return _finish(
        "payload-size-linearity",
        passed,
        f"scalar counts {counts} (expected 2*(n+2); residuals {residuals})",
        t0,
    )


def check_precision_noise_tradeoff(
    sigmas: tuple[float, ...] = DEFAULT_SIGMAS,
    queries: int = 200,
    docs: int = 100,
    n: int = 100,
    k: int = 10,
    seed: int = 909,
) -> CheckResult:
    """Mean precision@k against the noise-free ranking decays as sigma grows.

    All noise levels share the per-document streams, so a larger deviation
    scales the same perturbation and the comparison isolates sigma.
    """
    t0 = time.perf_counter()
    vocab, store, corpus, key = _equivalence_fixture(n, docs, seed)
    ids, matrix = doc_embedding_matrix(corpus, store)
    qrng = np.random.default_rng(np.random.SeedSequence([seed, 30]))
    query_list = _random_queries(vocab, queries, qrng, min_terms=3, max_terms=5)
    trapdoors = [
        make_trapdoor(terms, store, key, seed=seed + 50, query_id=qi)[0]
        for qi, terms in enumerate(query_list)
    ]
    reference = [
        frozenset(doc_id for doc_id, _ in plain_ranking(ids, matrix, terms, store, k))
        for terms in query_list
    ]
    means = []
    for sigma in sigmas:
        index, _ = build_index(corpus, store, key, sigma=sigma, seed=seed + 9)
        hits = 0
        for td, ref in zip(trapdoors, reference):
            got = {doc_id for doc_id, _ in execute_query(index, td, k)}
            hits += len(got & ref)
        means.append(hits / (queries * k))
    monotone = all(means[i + 1] <= means[i] + 1e-12 for i in range(len(means) - 1))
    passed = means[0] == 1.0 and monotone
    curve = {s: round(m, 4) for s, m in zip(sigmas, means)}
    return _finish(
        "precision-noise-tradeoff",
        passed,
        f"mean precision@{k} over {queries} queries: {curve}",
        t0,
        data={"sigmas": list(sigmas), "precision": means},
    )


# -- baseline and serialization ----------------------------------------------


def check_mrse_intersection_exhaustive(dict_size: int = 10, seed: int = 111) -> CheckResult:
    """Identity-blinded baseline scores count keyword overlaps exactly,
    over every document subset x every query subset of the dictionary."""
    t0 = time.perf_counter()
    words = [f"kw{i}" for i in range(dict_size)]
    dictionary = mrse.Dictionary(tuple(sorted(words)))
    key = core.gen_key(dict_size, seed)
    total = 1 << dict_size
    bits = np.array(
        [[(m >> j) & 1 for j in range(dict_size)] for m in range(total)], dtype=np.float64
    )
    rng = np.random.default_rng(seed)
    subs = []
    tds = []
    for m in range(total):
        terms = [words[j] for j in range(dict_size) if (m >> j) & 1]
        dv = mrse.binary_doc_vector(terms, dictionary)
        qv = mrse.binary_query_vector(terms, dictionary)
        plain = core.extend_index_vector(dv, 0.0, rng, doc_id=m)
        subs.append(core.encrypt_index(plain, key, rng))
        qext = core.extend_query_vector(qv, core.IDENTITY_BLINDING)
        tds.append(core.encrypt_trapdoor(qext, key, rng))
    # dictionary order is sorted(words); kw0..kw9 sort textually in index order
    assert dictionary.words == tuple(words)
    a = np.stack([s.first for s in subs])
    b = np.stack([s.second for s in subs])
    p = np.stack([t.first for t in tds])
    q = np.stack([t.second for t in tds])
    scores = a @ p.T + b @ q.T
    expected = bits @ bits.T
    max_err = float(np.max(np.abs(scores - expected)))
    exact = bool(np.all(np.rint(scores) == expected))
    return _finish(
        "mrse-intersection",
        max_err <= 1e-8 and exact,
        f"all {total}x{total} subset pairs of a {dict_size}-word dictionary, "
        f"max abs err {max_err:.3e}",
        t0,
    )


def check_serialization_roundtrip(seed: int = 121) -> CheckResult:
    """Byte-exact round-trips and detection of corrupted containers."""
    t0 = time.perf_counter()
    n = 16
    vocab, store = _synth_fixture(n, 20, seed)
    key = core.gen_key(n, seed)
    corpus = Corpus([vocab[:5], vocab[5:11]])
    index, _ = build_index(corpus, store, key, sigma=0.05, seed=seed)
    td, _, _ = make_trapdoor(vocab[:3], store, key, seed=seed)
    problems = []
    for name, blob, reader in (
        ("key", serialize_key(key), deserialize_key),
        ("index", serialize_index(index), deserialize_index),
        ("trapdoor", serialize_trapdoor(td), deserialize_trapdoor),
    ):
        again = {
            "key": serialize_key,
            "index": serialize_index,
            "trapdoor": serialize_trapdoor,
        }[name](reader(blob))
        if again != blob:
            problems.append(f"{name}: round-trip bytes differ")
        corrupted = bytearray(blob)
        corrupted[len(blob) // 2] ^= 0xFF  # flip one payload byte
        try:
            reader(bytes(corrupted))
            problems.append(f"{name}: corruption went undetected")
        except SerializationError:
            pass
        try:
            reader(blob[: len(blob) - 3])
            problems.append(f"{name}: truncation went undetected")
        except SerializationError:
            pass
    try:
        deserialize_key(serialize_trapdoor(td))
        problems.append("record-type confusion went undetected")
    except SerializationError:
        pass
    return _finish(
        "serialization-roundtrip",
        not problems,
        "; ".join(problems) if problems else "key/index/trapdoor round-trip byte-exact, "
        "corruption/truncation/type confusion all detected",
        t0,
    )


def check_determinism(seed: int = 131) -> CheckResult:
    """Same seeds produce bit-identical keys, indexes, and trapdoors."""
    t0 = time.perf_counter()
    n = 24
    vocab, store = _synth_fixture(n, 30, seed)
    corpus = Corpus([vocab[:6], vocab[4:12], vocab[10:16]])

    def build_all():
        key = core.gen_key(n, seed)
        index, _ = build_index(corpus, store, key, sigma=0.05, seed=seed + 1)
        td, _, _ = make_trapdoor(vocab[:4], store, key, seed=seed + 2)
        return serialize_key(key), serialize_index(index), serialize_trapdoor(td)

    first = build_all()
    second = build_all()
    passed = first == second
    return _finish(
        "determinism",
        passed,
        "rebuilt key/index/trapdoor bytes identical" if passed else "artifacts differ across runs",
        t0,
    )


def run_all(seed: int = 0, quick: bool = False) -> list[CheckResult]:
    """Execute the whole battery. ``quick`` trades sample sizes for speed."""
    scale = 10 if quick else 1
    return [
        check_split_reconstruction(trials=500 // scale, seed=seed + 101),
        check_inner_product_preservation(instances=10_000 // scale, seed=seed + 202),
        check_score_identity(triples=1000 // scale, seed=seed + 303),
        check_score_bounds(trials=500 // scale, seed=seed + 404),
        check_rank_equivalence(queries=50 // (scale if quick else 1), seed=seed + 505),
        check_trapdoor_rerandomization(seed=seed + 606),
        check_index_rerandomization(count=100 // (2 if quick else 1), seed=seed + 707),
        check_payload_size_linearity(dims=(50, 100) if quick else (50, 100, 200, 300), seed=seed + 808),
        check_precision_noise_tradeoff(queries=200 // scale, seed=seed + 909),
        check_mrse_intersection_exhaustive(dict_size=6 if quick else 10, seed=seed + 111),
        check_serialization_roundtrip(seed=seed + 121),
        check_determinism(seed=seed + 131),
    ]
