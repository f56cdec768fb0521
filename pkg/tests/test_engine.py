import numpy as np
import pytest

from lrse import (
    Corpus,
    IndexStore,
    SerializationError,
    build_index,
    execute_query,
    gen_key,
    make_trapdoor,
    synthesize,
)
from lrse.core import EncryptedSubindex, Trapdoor
from lrse.engine import (
    _CRC,
    _DOC_ID,
    _HEADER,
    deserialize_index,
    deserialize_key,
    deserialize_trapdoor,
    load_index,
    load_key,
    load_trapdoor,
    rank_top_k,
    save_index,
    save_key,
    save_trapdoor,
    serialize_index,
    serialize_key,
    serialize_trapdoor,
)
from lrse.pipeline import doc_embedding_matrix, plain_ranking


def constant_score_store(scores):
    """d=1 index where doc i scores exactly scores[i] against a unit trapdoor."""
    entries = [
        EncryptedSubindex(i, np.array([s / 2.0]), np.array([s / 2.0]))
        for i, s in enumerate(scores)
    ]
    td = Trapdoor(np.array([1.0]), np.array([1.0]))
    return IndexStore(-1, entries), td  # embed_dim -1 => vectors of length 1


class TestExecuteQuery:
    def test_tie_broken_by_doc_id(self):
        store, td = constant_score_store([4.2, 1.0, 4.2])
        assert execute_query(store, td, 2) == [(0, 4.2), (2, 4.2)]

    def test_k_beyond_store_returns_all_sorted(self):
        store, td = constant_score_store([1.0, 3.0, 2.0])
        assert [i for i, _ in execute_query(store, td, 10)] == [1, 2, 0]

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(0)
        scores = rng.standard_normal(100)
        store, td = constant_score_store(scores)
        got = execute_query(store, td, 50)
        oracle = sorted(enumerate(scores), key=lambda e: (-e[1], e[0]))[:50]
        assert [i for i, _ in got] == [i for i, _ in oracle]
        assert np.allclose([s for _, s in got], [s for _, s in oracle])

    def test_empty_store(self):
        store = IndexStore(4, [])
        td = Trapdoor(np.ones(6), np.ones(6))
        assert execute_query(store, td, 5) == []

    def test_dimension_mismatch(self):
        store, _ = constant_score_store([1.0])
        with pytest.raises(ValueError):
            execute_query(store, Trapdoor(np.ones(3), np.ones(3)), 1)

    def test_k_must_be_positive(self):
        store, td = constant_score_store([1.0])
        with pytest.raises(ValueError):
            execute_query(store, td, 0)

    def test_duplicate_doc_ids_rejected(self):
        entries = [
            EncryptedSubindex(1, np.ones(1), np.ones(1)),
            EncryptedSubindex(1, np.ones(1), np.ones(1)),
        ]
        with pytest.raises(ValueError, match="duplicate"):
            IndexStore(-1, entries)

    def test_rank_top_k_deterministic(self):
        ids = np.array([5, 3, 9])
        scores = np.array([1.0, 1.0, 0.5])
        assert rank_top_k(ids, scores, 3) == [(3, 1.0), (5, 1.0), (9, 0.5)]


@pytest.fixture(scope="module")
def artifacts():
    vocab = [f"w{i:02d}" for i in range(40)]
    store = synthesize(10, vocab, 5)
    key = gen_key(10, 21)
    corpus = Corpus([vocab[:8], vocab[5:14], vocab[12:20]])
    index, _ = build_index(corpus, store, key, sigma=0.05, seed=3,
                           payload_refs={0: "a.bin", 1: "b.bin", 2: "c.bin"})
    td, _, _ = make_trapdoor(vocab[:4], store, key, seed=9)
    return vocab, store, key, corpus, index, td


class TestSerialization:
    def test_key_roundtrip_byte_exact(self, artifacts):
        *_, key, _, _, _ = artifacts
        blob = serialize_key(key)
        again = deserialize_key(blob)
        assert serialize_key(again) == blob
        assert np.array_equal(again.split_bits, key.split_bits)
        assert np.array_equal(again.mix1, key.mix1)
        assert np.array_equal(again.mix2, key.mix2)
        assert np.array_equal(again.mix1_inv, key.mix1_inv)

    def test_index_roundtrip(self, artifacts):
        *_, index, _ = artifacts
        blob = serialize_index(index)
        again = deserialize_index(blob)
        assert serialize_index(again) == blob
        assert [e.doc_id for e in again.entries] == [e.doc_id for e in index.entries]

    def test_trapdoor_roundtrip(self, artifacts):
        *_, td = artifacts
        blob = serialize_trapdoor(td)
        assert serialize_trapdoor(deserialize_trapdoor(blob)) == blob

    def test_payload_byte_flip_detected(self, artifacts):
        *_, index, _ = artifacts
        blob = bytearray(serialize_index(index))
        blob[_HEADER.size + 12] ^= 0x01
        with pytest.raises(SerializationError, match="checksum"):
            deserialize_index(bytes(blob))

    def test_truncation_detected(self, artifacts):
        *_, td = artifacts
        blob = serialize_trapdoor(td)
        with pytest.raises(SerializationError):
            deserialize_trapdoor(blob[:-5])

    def test_bad_magic(self, artifacts):
        *_, td = artifacts
        blob = bytearray(serialize_trapdoor(td))
        blob[0] = ord(b"X")
        with pytest.raises(SerializationError, match="magic"):
            deserialize_trapdoor(bytes(blob))

    def test_version_mismatch(self, artifacts):
        *_, td = artifacts
        blob = bytearray(serialize_trapdoor(td))
        blob[4] = 9
        with pytest.raises(SerializationError, match="version"):
            deserialize_trapdoor(bytes(blob))

    def test_record_type_mismatch(self, artifacts):
        *_, key, _, index, td = artifacts
        with pytest.raises(SerializationError, match="record type"):
            deserialize_key(serialize_index(index))
        with pytest.raises(SerializationError, match="record type"):
            deserialize_index(serialize_trapdoor(td))

    def test_index_file_size_arithmetic(self):
        # size = header + count * (id + 2*(n+2) scalars) + crc, from the format
        n, count = 100, 1000
        vocab = [f"v{i}" for i in range(60)]
        store = synthesize(n, vocab, 1)
        key = gen_key(n, 2)
        rng = np.random.default_rng(0)
        corpus = Corpus([
            [str(w) for w in rng.choice(np.array(vocab), size=10, replace=True)]
            for _ in range(count)
        ])
        index, _ = build_index(corpus, store, key, sigma=0.0, seed=1)
        blob = serialize_index(index)
        expected = _HEADER.size + count * (_DOC_ID.size + 2 * (n + 2) * 8) + _CRC.size
        assert len(blob) == expected

    def test_file_helpers_and_sidecar(self, artifacts, tmp_path):
        *_, key, _, index, td = artifacts
        save_key(key, tmp_path / "k.lrse")
        save_index(index, tmp_path / "i.lrse", run_meta={"doc_side": "in"})
        save_trapdoor(td, tmp_path / "t.lrse")
        key2 = load_key(tmp_path / "k.lrse")
        index2, meta = load_index(tmp_path / "i.lrse")
        td2 = load_trapdoor(tmp_path / "t.lrse")
        assert serialize_key(key2) == serialize_key(key)
        assert serialize_trapdoor(td2) == serialize_trapdoor(td)
        assert index2.payload_refs == index.payload_refs
        assert meta["n"] == index.embed_dim
        assert meta["count"] == index.count
        assert meta["run"]["doc_side"] == "in"
        assert "sigma" not in str(meta).lower()


class TestRankingInvariance:
    def test_reblinded_trapdoors_rank_identically(self, artifacts):
        vocab, store, key, corpus, index, _ = artifacts
        rankings = set()
        blobs = set()
        for seed in range(8):
            td, _, _ = make_trapdoor(vocab[:4], store, key, seed=100 + seed)
            blobs.add(serialize_trapdoor(td))
            rankings.add(tuple(i for i, _ in execute_query(index, td, index.count)))
        assert len(blobs) == 8
        assert len(rankings) == 1

    def test_sigma_zero_matches_plain_ranking(self):
        vocab = [f"w{i:02d}" for i in range(60)]
        store = synthesize(12, vocab, 8)
        key = gen_key(12, 31)
        rng = np.random.default_rng(2)
        corpus = Corpus([
            [str(w) for w in rng.choice(np.array(vocab), size=12, replace=True)]
            for _ in range(25)
        ])
        index, _ = build_index(corpus, store, key, sigma=0.0, seed=6)
        ids, matrix = doc_embedding_matrix(corpus, store)
        for qseed in range(10):
            terms = [str(w) for w in rng.choice(np.array(vocab), size=4, replace=False)]
            td, _, _ = make_trapdoor(terms, store, key, seed=qseed)
            got = [i for i, _ in execute_query(index, td, 10)]
            want = [i for i, _ in plain_ranking(ids, matrix, terms, store, 10)]
            assert got == want
