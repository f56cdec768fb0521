"""Multi-keyword ranked search over encrypted document indexes.

Documents are represented by unit centroids of their keyword embeddings,
encrypted with a split-vector inner-product scheme, and ranked server-side
without revealing the plaintext vectors. Includes a plaintext relevance
oracle, a dictionary-vector baseline for cost comparison, a verification
battery, and a timing harness.
"""

from .core import (
    BlindingSecret,
    EncryptedSubindex,
    PlainIndexVector,
    SecretKey,
    Trapdoor,
    default_sides,
    desm_plain,
    doc_embedding,
    encrypt_index,
    encrypt_trapdoor,
    extend_index_vector,
    extend_query_vector,
    gen_key,
    query_embedding,
    score,
    split,
)
from .embeddings import (
    EmbeddingSide,
    EmbeddingStore,
    attach_text,
    load_text,
    nearest_words,
    save_text,
    synthesize,
)
from .engine import (
    IndexStore,
    execute_query,
    load_index,
    load_key,
    load_trapdoor,
    save_index,
    save_key,
    save_trapdoor,
)
from .errors import (
    ConditioningError,
    EmbeddingFormatError,
    LrseError,
    SerializationError,
    UnindexableDocument,
)
from .mrse import Dictionary, binary_doc_vector, binary_query_vector, mrse_score
from .pipeline import build_index, make_trapdoor
from .text_analysis import Corpus, KeywordSet, extract_keywords, tokenize

__version__ = "0.1.0"

__all__ = [
    "BlindingSecret",
    "ConditioningError",
    "Corpus",
    "Dictionary",
    "EmbeddingFormatError",
    "EmbeddingSide",
    "EmbeddingStore",
    "EncryptedSubindex",
    "IndexStore",
    "KeywordSet",
    "LrseError",
    "PlainIndexVector",
    "SecretKey",
    "SerializationError",
    "Trapdoor",
    "UnindexableDocument",
    "attach_text",
    "binary_doc_vector",
    "binary_query_vector",
    "build_index",
    "default_sides",
    "desm_plain",
    "doc_embedding",
    "encrypt_index",
    "encrypt_trapdoor",
    "execute_query",
    "extend_index_vector",
    "extend_query_vector",
    "extract_keywords",
    "gen_key",
    "load_index",
    "load_key",
    "load_text",
    "load_trapdoor",
    "make_trapdoor",
    "mrse_score",
    "nearest_words",
    "query_embedding",
    "save_index",
    "save_key",
    "save_text",
    "save_trapdoor",
    "score",
    "split",
    "synthesize",
    "tokenize",
]
