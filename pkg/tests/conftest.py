import numpy as np
import pytest

from lrse import Corpus, gen_key, synthesize


@pytest.fixture(scope="session")
def small_store():
    """Deterministic 8-dim store with 30 words."""
    vocab = [f"w{i:02d}" for i in range(30)]
    return vocab, synthesize(8, vocab, seed=99)


@pytest.fixture(scope="session")
def small_key():
    return gen_key(8, seed=42)


@pytest.fixture()
def rng():
    return np.random.default_rng(2024)


@pytest.fixture()
def tiny_corpus():
    return Corpus([
        ["alpha", "alpha", "beta", "gamma"],
        ["beta", "delta", "delta"],
        ["gamma", "epsilon", "alpha"],
    ])
