"""Corpus service - JSON-lines corpora, vocabulary and word/label embeddings.

The embedding table stands in for a pretrained contextual encoder: it is
either trained from a seeded Gaussian start or loaded frozen from a
plain-text vector file.
"""

import json
import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from treegraph.exceptions import CorpusError, DataError, ParseError
from treegraph.models import Document, EmbeddingTable, Sentence, Vocab
from treegraph.numeric import Tensor, ops

from .treebank import parse_conllu, parse_constituency, serialize_conllu, serialize_constituency

logger = logging.getLogger(__name__)


def document_from_dict(data: dict[str, Any]) -> Document:
    """Build a document from one decoded corpus line.

    Expected keys: ``id``, ``labels`` (list of strings) and ``sentences``
    (list of ``{tokens, conllu, bracketed}``).

    Raises:
        CorpusError: Missing fields or trees that do not match the tokens.
        ParseError: Malformed trees.
    """
    try:
        doc_id = str(data["id"])
        labels = list(data.get("labels", []))
        raw_sentences = data["sentences"]
    except (KeyError, TypeError) as e:
        raise CorpusError(f"corpus record is missing field {e}") from e

    sentences = []
    for i, raw in enumerate(raw_sentences):
        try:
            tokens = list(raw["tokens"])
            dep = parse_conllu(raw["conllu"])
            cons = parse_constituency(raw["bracketed"])
        except (KeyError, TypeError) as e:
            raise CorpusError(f"document {doc_id!r} sentence {i} is missing field {e}") from e
        if dep.words != tokens:
            raise CorpusError(f"document {doc_id!r} sentence {i}: CoNLL-U forms differ from tokens")
        if cons.words != tokens:
            raise CorpusError(f"document {doc_id!r} sentence {i}: bracketed leaves differ from tokens")
        sentences.append(Sentence(tokens=tokens, dep=dep, cons=cons))
    return Document(id=doc_id, sentences=sentences, labels=labels)


def document_to_dict(doc: Document) -> dict[str, Any]:
    return {
        "id": doc.id,
        "labels": list(doc.labels),
        "sentences": [
            {
                "tokens": list(s.tokens),
                "conllu": serialize_conllu(s.dep),
                "bracketed": serialize_constituency(s.cons),
            }
            for s in doc.sentences
        ],
    }


def load_corpus(path: str | Path) -> list[Document]:
    """Read a UTF-8 JSON-lines corpus, one document per line.

    Raises:
        DataError: Unreadable file, bad JSON, or invalid documents; the
            message names the offending line.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read corpus {path}: {e}") from e

    documents = []
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            documents.append(document_from_dict(json.loads(line)))
        except json.JSONDecodeError as e:
            raise CorpusError(f"{path}:{number}: invalid JSON: {e}") from e
        except ParseError as e:
            raise ParseError(f"{path}:{number}: {e.reason}", offset=e.offset, line=e.line) from e
        except CorpusError as e:
            raise CorpusError(f"{path}:{number}: {e}") from e
    if not documents:
        raise CorpusError(f"corpus {path} holds no documents")
    logger.info(f"Loaded {len(documents)} documents from {path}")
    return documents


def save_corpus(documents: Iterable[Document], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for doc in documents:
            f.write(json.dumps(document_to_dict(doc), ensure_ascii=False) + "\n")
    return path


def build_vocab(corpus: Sequence[Document], min_count: int = 1, hash_buckets: int = 64) -> Vocab:
    """Assign ids to tokens seen at least ``min_count`` times.

    Ids are ordered by descending frequency, then lexicographically, so
    the same corpus always yields the same vocabulary.

    Raises:
        CorpusError: Empty corpus.
        ValueError: ``min_count`` < 1.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    if not corpus:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    counts = Counter(token for doc in corpus for s in doc.sentences for token in s.tokens)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    return Vocab(tokens=kept, hash_buckets=hash_buckets)


def init_embedding_table(
    vocab: Vocab, d: int, rng: np.random.Generator, std: float = 0.02
) -> EmbeddingTable:
    """Trainable table with N(0, std^2) rows, UNK and hash buckets included."""
    weight = Tensor(rng.normal(0.0, std, size=(len(vocab), d)), requires_grad=True, name="embeddings")
    return EmbeddingTable(weight=weight, trainable=True)


def load_embedding_file(
    path: str | Path, vocab: Vocab, rng: np.random.Generator, std: float = 0.02
) -> EmbeddingTable:
    """Frozen table from a ``V d`` header followed by ``token v1 .. vd`` lines.

    Vocabulary rows missing from the file keep a Gaussian initialization.

    Raises:
        DataError: Malformed header or rows.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DataError(f"cannot read embeddings {path}: {e}") from e
    try:
        count, d = (int(x) for x in lines[0].split())
    except (IndexError, ValueError):
        raise ParseError("embedding file header must be 'V d'", line=1) from None

    weight = rng.normal(0.0, std, size=(len(vocab), d))
    found = 0
    for number, line in enumerate(lines[1 : count + 1], start=2):
        parts = line.split()
        if len(parts) != d + 1:
            raise ParseError(f"expected {d} values, got {len(parts) - 1}", line=number)
        if parts[0] in vocab:
            try:
                weight[vocab.id(parts[0])] = [float(v) for v in parts[1:]]
            except ValueError:
                raise ParseError("non-numeric vector component", line=number) from None
            found += 1
    logger.warning(
        f"Using frozen vectors from {path} in place of a pretrained contextual encoder "
        f"({found}/{len(vocab.tokens)} vocabulary tokens covered)"
    )
    return EmbeddingTable(weight=Tensor(weight, requires_grad=False, name="embeddings"), trainable=False)


def embed_tokens(tokens: Sequence[str], table: EmbeddingTable, vocab: Vocab) -> Tensor:
    """n x d matrix whose row i is the embedding of token i (UNK row if unseen)."""
    return ops.take_rows(table.weight, vocab.ids(tokens))


def label_embedding(name: str, table: EmbeddingTable, vocab: Vocab) -> Tensor:
    """Mean of the embeddings of the label-name words.

    Words outside the vocabulary map to a stable hash bucket rather than
    UNK, so distinct unseen label names stay distinguishable.

    Raises:
        CorpusError: Empty label name.
    """
    words = name.split()
    if not words:
        raise CorpusError("label name is empty")
    rows = ops.take_rows(table.weight, [vocab.label_word_id(w) for w in words])
    return ops.mean(rows, axis=0)


def label_embeddings(names: Sequence[str], table: EmbeddingTable, vocab: Vocab) -> Tensor:
    """L x d matrix of label embeddings in label-set order."""
    return ops.stack([label_embedding(name, table, vocab) for name in names])
