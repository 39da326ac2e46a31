"""Pytest fixtures for treegraph tests."""

import numpy as np
import pytest
from click.testing import CliRunner

from treegraph.config import config
from treegraph.models import EmbeddingTable, ModelParams, Vocab
from treegraph.numeric import Tensor
from treegraph.services import GraphTreeClassifier, planted_corpus


@pytest.fixture
def rng():
    """Seeded generator so every test sees the same random draws."""
    return np.random.default_rng(1234)


@pytest.fixture
def cfg():
    """Small architecture from the testing preset, permissive threshold."""
    return config["testing"].with_overrides(tau=0.05)


@pytest.fixture
def corpus():
    """Eight short planted-token documents over two classes."""
    return planted_corpus(
        n_docs=8, n_classes=2, vocab_size=12, sentences=(2, 4), sentence_length=(2, 4), seed=3
    )


@pytest.fixture
def model(corpus, cfg):
    return GraphTreeClassifier.create(corpus, cfg)


@pytest.fixture
def params(rng, cfg):
    """Model parameters over a small vocabulary of filler tokens and class names."""
    vocab = Vocab(tokens=["alpha", "beta"] + [f"w{i}" for i in range(10)], hash_buckets=4)
    table = EmbeddingTable(weight=Tensor(rng.normal(0, 0.5, size=(len(vocab), cfg.d)), requires_grad=True))
    return ModelParams.init(rng, table, 2, cfg), vocab


@pytest.fixture
def runner():
    """Create CLI test runner."""
    return CliRunner()
