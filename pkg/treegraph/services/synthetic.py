"""Seeded planted-token corpora for smoke runs and acceptance checks.

Every document carries its class name as a token in at least one
sentence; all other tokens are uninformative fillers.
"""

import numpy as np

from treegraph.config import check_seed
from treegraph.exceptions import ConfigError
from treegraph.models import ConstNode, ConstTree, DepNode, DepTree, Document, Sentence

CLASS_NAMES = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta")
PLANT_MODES = ("any", "first_chunk")


def right_branching(tokens: list[str]) -> ConstTree:
    """``(S (T w0) (S (T w1) ... (T wn)))``."""
    leaves = [ConstNode(label="T", children=[ConstNode(token=i, word=w)]) for i, w in enumerate(tokens)]
    node = ConstNode(label="S", children=[leaves[-1]])
    for leaf in reversed(leaves[:-1]):
        node = ConstNode(label="S", children=[leaf, node])
    return ConstTree(root=node)


def chain(tokens: list[str]) -> DepTree:
    """Token 0 is the root and token i depends on token i - 1."""
    nodes = [
        DepNode(token=i, form=w, head=i - 1, deprel="root" if i == 0 else "dep")
        for i, w in enumerate(tokens)
    ]
    for node in nodes[1:]:
        nodes[node.head].children.append(node.token)
    return DepTree(nodes=nodes, root=0)


def make_sentence(tokens: list[str]) -> Sentence:
    return Sentence(tokens=list(tokens), dep=chain(tokens), cons=right_branching(tokens))


def planted_corpus(
    n_docs: int = 40,
    n_classes: int = 2,
    vocab_size: int = 50,
    sentences: tuple[int, int] = (3, 6),
    seed: int = 0,
    plant: str = "any",
    sentence_length: tuple[int, int] = (4, 8),
) -> list[Document]:
    """Generate a balanced single-label corpus.

    Args:
        n_docs: Number of documents; classes are assigned round-robin.
        n_classes: Number of classes (at most 8); label names are the class tokens.
        vocab_size: Total distinct tokens, class tokens included.
        sentences: Inclusive range of sentences per document.
        seed: Generator seed.
        plant: ``any`` plants the class token in random sentences;
            ``first_chunk`` only in sentences of the first third.
        sentence_length: Inclusive range of tokens per sentence.

    Raises:
        ConfigError: Inconsistent sizes or an unknown plant mode.
    """
    if not 2 <= n_classes <= len(CLASS_NAMES):
        raise ConfigError(f"n_classes must lie in 2..{len(CLASS_NAMES)}")
    if vocab_size <= n_classes:
        raise ConfigError("vocab_size must exceed n_classes")
    if plant not in PLANT_MODES:
        raise ConfigError(f"plant must be one of {', '.join(PLANT_MODES)}")
    if sentences[0] < 1 or sentences[1] < sentences[0]:
        raise ConfigError(f"bad sentence range {sentences}")
    if sentence_length[0] < 1 or sentence_length[1] < sentence_length[0]:
        raise ConfigError(f"bad sentence length range {sentence_length}")
    check_seed(seed)

    rng = np.random.default_rng(seed)
    classes = CLASS_NAMES[:n_classes]
    fillers = [f"w{i}" for i in range(vocab_size - n_classes)]
    documents = []
    for d in range(n_docs):
        label = classes[d % n_classes]
        n = int(rng.integers(sentences[0], sentences[1] + 1))
        lengths = rng.integers(sentence_length[0], sentence_length[1] + 1, size=n)
        token_lists = [[fillers[j] for j in rng.integers(0, len(fillers), int(m))] for m in lengths]
        # first chunk of an n-sentence document has ceil(n / 3) sentences
        pool = range(-(-n // 3)) if plant == "first_chunk" else range(n)
        planted = rng.choice(list(pool), size=int(rng.integers(1, len(pool) + 1)), replace=False)
        for i in planted:
            tokens = token_lists[int(i)]
            tokens[int(rng.integers(0, len(tokens)))] = label
        documents.append(
            Document(id=f"doc{d:04d}", sentences=[make_sentence(t) for t in token_lists], labels=[label])
        )
    return documents
