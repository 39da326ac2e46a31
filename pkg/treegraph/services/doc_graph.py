"""Document graph: label-wise sentence selection, graph attention, document encoding.

Graph node numbering is fixed: node 0 is the document, nodes ``1..K`` are
the selected sentences in document order, and the word types of those
sentences follow in first-occurrence order.
"""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from treegraph.exceptions import ConfigError, GraphError, ShapeError
from treegraph.models import DocEncoderParams, Document, GATParams
from treegraph.numeric import Tensor, ops

from .layers import activate, feed_forward

logger = logging.getLogger(__name__)

SOFTMAX_AXES = ("labels", "sentences")


class EdgeType(str, Enum):
    SENT_TO_DOC = "sent_to_doc"
    DOC_TO_SENT = "doc_to_sent"
    SENT_TO_WORD = "sent_to_word"
    WORD_TO_SENT = "word_to_sent"
    SELF = "self"


@dataclass
class LabelAttention:
    """Label-wise attention of every sentence.

    ``scores[i, l]`` is the normalized affinity of sentence i for label l,
    ``max_scores[i]`` its best score over labels.
    """

    scores: Tensor
    max_scores: np.ndarray
    axis: str = "labels"


def labelwise_scores(sentences: Tensor, labels: Tensor, axis: str = "labels") -> LabelAttention:
    """Dot-product affinities between N sentence and L label vectors.

    Args:
        sentences: N x d sentence encodings.
        labels: L x d label embeddings.
        axis: ``labels`` normalizes each sentence over labels; ``sentences``
            normalizes each label over sentences.

    Raises:
        ConfigError: Unknown normalization axis.
        ShapeError: Mismatched widths.
    """
    if axis not in SOFTMAX_AXES:
        raise ConfigError(f"label softmax axis must be one of {', '.join(SOFTMAX_AXES)}")
    if sentences.data.ndim != 2 or labels.data.ndim != 2 or sentences.shape[1] != labels.shape[1]:
        raise ShapeError("labelwise_scores", sentences.shape, labels.shape)
    raw = sentences @ ops.transpose(labels)
    scores = ops.softmax(raw, axis=1 if axis == "labels" else 0)
    return LabelAttention(scores=scores, max_scores=scores.data.max(axis=1), axis=axis)


def select_sentences(attention: LabelAttention, tau: float) -> list[int]:
    """Indices of sentences whose best label score reaches ``tau``.

    When no sentence qualifies, the single highest-scoring sentence is kept
    (the lowest index on ties), so the result is never empty.

    Raises:
        ConfigError: ``tau`` outside (0, 1).
    """
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")
    chosen = [i for i, score in enumerate(attention.max_scores) if score >= tau]
    if not chosen:
        chosen = [int(np.argmax(attention.max_scores))]
        logger.debug(f"No sentence reached tau={tau}, keeping sentence {chosen[0]}")
    return chosen


@dataclass
class DocGraph:
    """Heterogeneous document graph over the selected sentences."""

    sentence_ids: list[int]
    words: list[str]
    edges: dict[EdgeType, list[tuple[int, int]]] = field(default_factory=dict)

    @property
    def num_sentences(self) -> int:
        return len(self.sentence_ids)

    @property
    def num_nodes(self) -> int:
        return 1 + len(self.sentence_ids) + len(self.words)

    def sentence_node(self, k: int) -> int:
        return 1 + k

    def word_node(self, j: int) -> int:
        return 1 + len(self.sentence_ids) + j

    @property
    def sentence_nodes(self) -> list[int]:
        return [self.sentence_node(k) for k in range(self.num_sentences)]

    @property
    def word_nodes(self) -> list[int]:
        return [self.word_node(j) for j in range(len(self.words))]

    def neighborhoods(
        self, edge_type: EdgeType, targets: Sequence[int], self_edges: bool = True
    ) -> dict[int, list[int]]:
        """Sources of ``edge_type`` edges into each target, optionally with the target itself.

        Returned lists are sorted by node id.
        """
        result: dict[int, set[int]] = {t: set() for t in targets}
        for source, target in self.edges.get(edge_type, []):
            if target in result:
                result[target].add(source)
        if self_edges:
            for source, target in self.edges.get(EdgeType.SELF, []):
                if target in result:
                    result[target].add(source)
        return {t: sorted(sources) for t, sources in result.items()}


def build_doc_graph(document: Document, selected: Sequence[int]) -> DocGraph:
    """Graph over the selected sentences of ``document``.

    Sentence nodes link to and from the document node; word nodes link to
    and from every selected sentence containing them; every node carries a
    self edge.

    Raises:
        GraphError: Empty or out-of-range selection.
    """
    if not selected:
        raise GraphError(f"document {document.id!r}: no sentences selected")
    ids = sorted(set(selected))
    if ids[0] < 0 or ids[-1] >= len(document.sentences):
        raise GraphError(f"document {document.id!r}: selected sentence out of range")

    words: dict[str, int] = {}
    for i in ids:
        for token in document.sentences[i].tokens:
            words.setdefault(token, len(words))

    graph = DocGraph(sentence_ids=ids, words=list(words))
    edges = {edge_type: [] for edge_type in EdgeType}
    for k, i in enumerate(ids):
        s = graph.sentence_node(k)
        edges[EdgeType.SENT_TO_DOC].append((s, 0))
        edges[EdgeType.DOC_TO_SENT].append((0, s))
        for token in dict.fromkeys(document.sentences[i].tokens):
            w = graph.word_node(words[token])
            edges[EdgeType.SENT_TO_WORD].append((s, w))
            edges[EdgeType.WORD_TO_SENT].append((w, s))
    edges[EdgeType.SELF] = [(n, n) for n in range(graph.num_nodes)]
    graph.edges = edges
    return graph


def gat_layer(
    feats: Tensor,
    neighborhoods: Mapping[int, Sequence[int]],
    params: GATParams,
    attention_out: list[np.ndarray] | None = None,
) -> Tensor:
    """Multi-head graph attention for the target nodes of ``neighborhoods``.

    For each head, ``e_ij = LeakyReLU(a . [W h_i ; W h_j])`` is normalized
    over the neighborhood of target i and the attended sum of ``W h_j`` is
    passed through the head activation. Heads are concatenated or averaged.

    Args:
        feats: n x d node features.
        neighborhoods: Target node -> source nodes, in output row order.
        params: Head weights and combination mode.
        attention_out: If given, each head's targets x n weight matrix is appended.

    Returns:
        One output row per target.

    Raises:
        GraphError: A target with an empty neighborhood, or a node id out of range.
    """
    n = feats.shape[0]
    targets = list(neighborhoods)
    if not targets:
        raise GraphError("graph attention needs at least one target")
    mask = np.zeros((len(targets), n), dtype=bool)
    for row, target in enumerate(targets):
        sources = neighborhoods[target]
        if not sources:
            raise GraphError(f"node {target} has an empty neighborhood")
        if not 0 <= target < n or min(sources) < 0 or max(sources) >= n:
            raise GraphError(f"node id out of range for {n} nodes")
        mask[row, list(sources)] = True

    outputs = []
    for head in params.heads:
        width = head.width
        Z = feats @ head.W
        target_scores = ops.take_rows(ops.reshape(Z @ ops.narrow(head.a, 0, width), (n, 1)), targets)
        source_scores = ops.reshape(Z @ ops.narrow(head.a, width, width), (1, n))
        logits = ops.leaky_relu(ops.add(target_scores, source_scores), params.slope)
        weights = ops.masked_softmax(logits, mask, axis=1)
        if attention_out is not None:
            attention_out.append(weights.data)
        outputs.append(activate(weights @ Z, params.activation))

    if params.combine == "concat":
        return ops.concat(outputs, axis=1)
    if params.combine == "mean":
        return ops.mean(ops.stack(outputs), axis=0)
    raise ConfigError(f"unknown head combination {params.combine!r}")


@dataclass
class DocEncoding:
    """Document vector before graph attention, after it, and after the FFN."""

    h_mean: Tensor
    h_attended: Tensor
    h: Tensor


def encode_document(
    sentences: Tensor,
    params: DocEncoderParams,
    no_gat: bool = False,
    graph: DocGraph | None = None,
) -> DocEncoding:
    """Aggregate K selected sentence encodings into a document vector.

    The document node starts from the mean sentence vector and attends over
    itself and the sentences; ``no_gat`` replaces attention with an
    elementwise max over sentences.
    """
    if sentences.data.ndim != 2 or sentences.shape[0] == 0:
        raise ShapeError("encode_document", sentences.shape)
    K, d = sentences.shape
    h_mean = ops.mean(sentences, axis=0)
    if no_gat:
        h_attended = ops.max(sentences, axis=0)
    else:
        if graph is not None:
            if graph.num_sentences != K:
                raise GraphError(f"graph has {graph.num_sentences} sentences, got {K} encodings")
            neighborhoods = graph.neighborhoods(EdgeType.SENT_TO_DOC, [0])
        else:
            neighborhoods = {0: list(range(K + 1))}
        feats = ops.concat([ops.reshape(h_mean, (1, d)), sentences], axis=0)
        h_attended = ops.row(gat_layer(feats, neighborhoods, params.gat), 0)
    return DocEncoding(h_mean=h_mean, h_attended=h_attended, h=feed_forward(h_attended, params.ffn))
