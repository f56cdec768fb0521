"""Server-side index storage, ranked retrieval, and the binary container.

Container layout (little-endian throughout):

    magic          4 bytes  b"LRSE"
    version        u32      1
    record type    u8       1 = key, 2 = index, 3 = trapdoor
    n              u32      embedding dimension (vectors are n+2 long)
    count          u64      key: indicator length n+2; index: documents;
                            trapdoor: 1
    payload        ...      key: indicator bytes (0/1), then both mixing
                            matrices row-major as f64;
                            index: per document doc_id u64 + both subindex
                            vectors as f64;
                            trapdoor: both trapdoor vectors as f64
    crc32          u32      CRC-32 of the payload bytes

Payload references (opaque encrypted-file handles) and run metadata travel
in a JSON sidecar next to the index file, never inside the container.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg
from .core import EXTRA_DIMS, EncryptedSubindex, SecretKey, Trapdoor
from .errors import SerializationError

MAGIC = b"LRSE"
FORMAT_VERSION = 1
RECORD_KEY = 1
RECORD_INDEX = 2
RECORD_TRAPDOOR = 3

_HEADER = struct.Struct("<4sIBIQ")
_CRC = struct.Struct("<I")
_DOC_ID = struct.Struct("<Q")


@dataclass(eq=False)
class IndexStore:
    """Encrypted subindexes plus opaque payload references, keyed by doc id."""

    embed_dim: int
    entries: list[EncryptedSubindex]
    payload_refs: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        d = self.dim
        seen: set[int] = set()
        for e in self.entries:
            if e.doc_id in seen:
                raise ValueError(f"duplicate doc_id {e.doc_id} in index")
            seen.add(e.doc_id)
            if e.first.shape != (d,) or e.second.shape != (d,):
                raise ValueError(f"subindex {e.doc_id} has wrong vector length")
        # Scoring layout, built once; the store is immutable after load.
        if self.entries:
            self._ids = np.array([e.doc_id for e in self.entries], dtype=np.int64)
            self._first = np.stack([e.first for e in self.entries])
            self._second = np.stack([e.second for e in self.entries])
        else:
            self._ids = np.empty(0, dtype=np.int64)
            self._first = np.empty((0, d))
            self._second = np.empty((0, d))

    @property
    def dim(self) -> int:
        return self.embed_dim + EXTRA_DIMS

    @property
    def count(self) -> int:
        return len(self.entries)


def rank_top_k(ids: np.ndarray, scores: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Descending-score selection with ascending doc_id tie-break.

    Shared by encrypted and plaintext ranking so equivalence tests compare
    like with like.
    """
    order = np.lexsort((ids, -scores))[:k]
    return [(int(ids[i]), float(scores[i])) for i in order]


def execute_query(store: IndexStore, td: Trapdoor, k: int) -> list[tuple[int, float]]:
    """Score every subindex against the trapdoor and return the top k."""
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if store.count == 0:
        return []
    if td.first.shape != (store.dim,) or td.second.shape != (store.dim,):
        raise ValueError(
            f"trapdoor dimension {td.first.size} does not match index dimension {store.dim}"
        )
    scores = store._first @ td.first + store._second @ td.second
    return rank_top_k(store._ids, scores, k)


# -- container helpers ---------------------------------------------------


def _pack(rtype: int, n: int, count: int, payload: bytes) -> bytes:
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, rtype, n, count)
    return header + payload + _CRC.pack(zlib.crc32(payload))


def _unpack(data: bytes, expect_rtype: int) -> tuple[int, int, bytes]:
    if len(data) < _HEADER.size + _CRC.size:
        raise SerializationError("truncated container")
    magic, version, rtype, n, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SerializationError("bad magic")
    if version != FORMAT_VERSION:
        raise SerializationError(f"unsupported format version {version}")
    if rtype != expect_rtype:
        raise SerializationError(f"record type {rtype} where {expect_rtype} expected")
    payload = data[_HEADER.size : -_CRC.size]
    (stored_crc,) = _CRC.unpack_from(data, len(data) - _CRC.size)
    if zlib.crc32(payload) != stored_crc:
        raise SerializationError("payload checksum mismatch")
    return n, count, payload


def _expect_len(payload: bytes, expected: int, what: str) -> None:
    if len(payload) != expected:
        raise SerializationError(
            f"{what}: payload is {len(payload)} bytes, expected {expected}"
        )


def _vec_bytes(v: np.ndarray) -> bytes:
    return np.ascontiguousarray(v, dtype="<f8").tobytes()


def _read_vec(payload: bytes, offset: int, d: int) -> tuple[np.ndarray, int]:
    vec = np.frombuffer(payload, dtype="<f8", count=d, offset=offset).astype(np.float64)
    return vec, offset + 8 * d


# -- secret key ----------------------------------------------------------


def serialize_key(key: SecretKey) -> bytes:
    d = key.dim
    payload = (
        key.split_bits.astype(np.uint8).tobytes()
        + _vec_bytes(key.mix1.reshape(-1))
        + _vec_bytes(key.mix2.reshape(-1))
    )
    return _pack(RECORD_KEY, key.embed_dim, d, payload)


def deserialize_key(data: bytes) -> SecretKey:
    n, count, payload = _unpack(data, RECORD_KEY)
    d = n + EXTRA_DIMS
    if count != d:
        raise SerializationError(f"dimension inconsistency: count {count}, expected {d}")
    _expect_len(payload, d + 2 * d * d * 8, "key")
    bits = np.frombuffer(payload, dtype=np.uint8, count=d).copy()
    if not np.all((bits == 0) | (bits == 1)):
        raise SerializationError("split indicator bytes must be 0 or 1")
    m1_flat, off = _read_vec(payload, d, d * d)
    m2_flat, _ = _read_vec(payload, off, d * d)
    m1 = m1_flat.reshape(d, d)
    m2 = m2_flat.reshape(d, d)
    return SecretKey(
        split_bits=bits,
        mix1=m1,
        mix2=m2,
        mix1_t=np.ascontiguousarray(m1.T),
        mix2_t=np.ascontiguousarray(m2.T),
        mix1_inv=linalg.invert(m1),
        mix2_inv=linalg.invert(m2),
        embed_dim=n,
        seed=None,
    )


# -- index ----------------------------------------------------------------


def serialize_index(store: IndexStore) -> bytes:
    parts = []
    for e in store.entries:
        parts.append(_DOC_ID.pack(e.doc_id))
        parts.append(_vec_bytes(e.first))
        parts.append(_vec_bytes(e.second))
    return _pack(RECORD_INDEX, store.embed_dim, store.count, b"".join(parts))


def deserialize_index(data: bytes) -> IndexStore:
    n, count, payload = _unpack(data, RECORD_INDEX)
    d = n + EXTRA_DIMS
    per_doc = _DOC_ID.size + 2 * d * 8
    _expect_len(payload, count * per_doc, "index")
    entries = []
    offset = 0
    for _ in range(count):
        (doc_id,) = _DOC_ID.unpack_from(payload, offset)
        offset += _DOC_ID.size
        first, offset = _read_vec(payload, offset, d)
        second, offset = _read_vec(payload, offset, d)
        entries.append(EncryptedSubindex(int(doc_id), first, second))
    return IndexStore(n, entries)


# -- trapdoor --------------------------------------------------------------


def serialize_trapdoor(td: Trapdoor) -> bytes:
    n = td.first.size - EXTRA_DIMS
    payload = _vec_bytes(td.first) + _vec_bytes(td.second)
    return _pack(RECORD_TRAPDOOR, n, 1, payload)


def deserialize_trapdoor(data: bytes) -> Trapdoor:
    n, count, payload = _unpack(data, RECORD_TRAPDOOR)
    if count != 1:
        raise SerializationError(f"dimension inconsistency: trapdoor count {count}")
    d = n + EXTRA_DIMS
    _expect_len(payload, 2 * d * 8, "trapdoor")
    first, offset = _read_vec(payload, 0, d)
    second, _ = _read_vec(payload, offset, d)
    return Trapdoor(first, second)


# -- files ------------------------------------------------------------------


def save_key(key: SecretKey, path: str | Path) -> None:
    Path(path).write_bytes(serialize_key(key))


def load_key(path: str | Path) -> SecretKey:
    return deserialize_key(Path(path).read_bytes())


def _sidecar(path: Path) -> Path:
    return Path(str(path) + ".meta.json")


def save_index(store: IndexStore, path: str | Path, run_meta: dict | None = None) -> None:
    """Write the binary index plus a JSON sidecar with refs and run metadata.

    The sidecar never includes the noise deviation; the server learns only
    the dimension and document count.
    """
    path = Path(path)
    path.write_bytes(serialize_index(store))
    meta = {
        "n": store.embed_dim,
        "count": store.count,
        "payloads": {str(doc_id): ref for doc_id, ref in sorted(store.payload_refs.items())},
    }
    if run_meta:
        meta["run"] = run_meta
    _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_index(path: str | Path) -> tuple[IndexStore, dict]:
    path = Path(path)
    store = deserialize_index(path.read_bytes())
    meta: dict = {}
    sidecar = _sidecar(path)
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text())
        except json.JSONDecodeError as exc:
            raise SerializationError(f"{sidecar}: invalid sidecar JSON: {exc}") from None
        store.payload_refs = {int(k): str(v) for k, v in meta.get("payloads", {}).items()}
    return store, meta


def save_trapdoor(td: Trapdoor, path: str | Path) -> None:
    Path(path).write_bytes(serialize_trapdoor(td))


def load_trapdoor(path: str | Path) -> Trapdoor:
    return deserialize_trapdoor(Path(path).read_bytes())
