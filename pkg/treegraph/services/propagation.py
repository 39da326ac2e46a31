"""Bidirectional propagation between the document, sentence and word levels.

Pass 1 encodes every sentence from its word embeddings, selects sentences
by label-wise attention and builds the document vector. Each further
iteration sends the document state down to the selected sentences and
their word types, then re-encodes only those sentences upward from the
updated word vectors. The selection from pass 1 is kept throughout.
"""

import logging
from dataclasses import dataclass, field, replace

from treegraph.config import TrainConfig
from treegraph.exceptions import ConfigError, GraphError
from treegraph.models import Document, DownwardStage, ModelParams, Vocab
from treegraph.numeric import Tensor, ops

from .corpus import embed_tokens, label_embeddings
from .doc_graph import (
    DocEncoding,
    DocGraph,
    EdgeType,
    LabelAttention,
    build_doc_graph,
    encode_document,
    gat_layer,
    labelwise_scores,
    select_sentences,
)
from .layers import feed_forward
from .tree_encoder import encode_sentence

logger = logging.getLogger(__name__)


@dataclass
class AccessTracer:
    """Records which sentences and word types the re-encoding passes read."""

    sentences: set[int] = field(default_factory=set)
    words: set[str] = field(default_factory=set)


@dataclass
class PassState:
    """Channel-wise states of the selected sentences and their word types."""

    graph: DocGraph
    h_d: Tensor
    h_c: Tensor
    words_d: Tensor
    words_c: Tensor
    doc: DocEncoding | None
    iteration: int = 0


@dataclass
class PassResult:
    attention: LabelAttention
    selected: list[int]
    graph: DocGraph
    first: DocEncoding
    final: DocEncoding
    states: list[PassState]


def upward_pass(
    document: Document,
    params: ModelParams,
    vocab: Vocab,
    label_names: list[str] | tuple[str, ...],
    cfg: TrainConfig,
) -> tuple[LabelAttention, PassState]:
    """Pass 1: encode all sentences, select, and build the document vector."""
    table = params.embeddings
    encodings = []
    for sentence in document.sentences:
        words = embed_tokens(sentence.tokens, table, vocab)
        encodings.append(
            encode_sentence(
                sentence, words, words, params.dtt, params.ctt, cfg.no_dtt, cfg.no_ctt
            )
        )

    labels = label_embeddings(label_names, table, vocab)
    attention = labelwise_scores(
        ops.stack([e.h for e in encodings]), labels, cfg.label_softmax_axis
    )
    selected = select_sentences(attention, cfg.tau)
    graph = build_doc_graph(document, selected)

    chosen = [encodings[i] for i in graph.sentence_ids]
    h = ops.stack([e.h for e in chosen])
    doc = encode_document(h, params.doc, no_gat=cfg.no_gat, graph=graph)
    word_rows = ops.take_rows(table.weight, vocab.ids(graph.words))
    state = PassState(
        graph=graph,
        h_d=ops.stack([e.h_d for e in chosen]),
        h_c=ops.stack([e.h_c for e in chosen]),
        words_d=word_rows,
        words_c=word_rows,
        doc=doc,
    )
    logger.debug(
        f"Document {document.id}: selected {len(selected)}/{len(document.sentences)} sentences"
    )
    return attention, state


def _stage(feats: Tensor, neighborhoods: dict[int, list[int]], stage: DownwardStage) -> Tensor:
    return feed_forward(gat_layer(feats, neighborhoods, stage.gat), stage.ffn)


def downward_update(state: PassState, params: ModelParams, cfg: TrainConfig) -> PassState:
    """Send the document state to the sentences, then the sentence states to the words.

    Each channel has its own stages. A bypass stage leaves its targets
    unchanged.

    Raises:
        GraphError: The state carries no document encoding yet.
    """
    if state.doc is None:
        raise GraphError("downward update requested before the upward pass")
    graph = state.graph
    d = state.h_d.shape[1]
    doc_row = ops.reshape(state.doc.h, (1, d))
    down = params.downward

    sent_targets = graph.neighborhoods(EdgeType.DOC_TO_SENT, graph.sentence_nodes)
    word_targets = graph.neighborhoods(
        EdgeType.SENT_TO_WORD, graph.word_nodes, self_edges=cfg.word_self_edge
    )

    updated = {}
    for channel, sentences, words, to_sent, to_word in (
        ("d", state.h_d, state.words_d, down.doc_to_sent_d, down.sent_to_word_d),
        ("c", state.h_c, state.words_c, down.doc_to_sent_c, down.sent_to_word_c),
    ):
        if to_sent.bypass:
            new_sentences = sentences
        else:
            new_sentences = _stage(ops.concat([doc_row, sentences], axis=0), sent_targets, to_sent)
        if to_word.bypass:
            new_words = words
        else:
            feats = ops.concat([doc_row, new_sentences, words], axis=0)
            new_words = _stage(feats, word_targets, to_word)
        updated[channel] = (new_sentences, new_words)

    return replace(
        state,
        h_d=updated["d"][0],
        h_c=updated["c"][0],
        words_d=updated["d"][1],
        words_c=updated["c"][1],
        doc=None,
    )


def upward_reencode(
    document: Document,
    state: PassState,
    params: ModelParams,
    cfg: TrainConfig,
    tracer: AccessTracer | None = None,
) -> PassState:
    """Re-encode the selected sentences from the updated word-type vectors."""
    graph = state.graph
    word_index = {word: j for j, word in enumerate(graph.words)}
    encodings = []
    for i in graph.sentence_ids:
        sentence = document.sentences[i]
        rows = [word_index[token] for token in sentence.tokens]
        if tracer is not None:
            tracer.sentences.add(i)
            tracer.words.update(sentence.tokens)
        encodings.append(
            encode_sentence(
                sentence,
                ops.take_rows(state.words_d, rows),
                ops.take_rows(state.words_c, rows),
                params.dtt,
                params.ctt,
                cfg.no_dtt,
                cfg.no_ctt,
            )
        )
    h = ops.stack([e.h for e in encodings])
    return replace(
        state,
        h_d=ops.stack([e.h_d for e in encodings]),
        h_c=ops.stack([e.h_c for e in encodings]),
        doc=encode_document(h, params.doc, no_gat=cfg.no_gat, graph=graph),
        iteration=state.iteration + 1,
    )


def run_passes(
    document: Document,
    params: ModelParams,
    vocab: Vocab,
    label_names: list[str] | tuple[str, ...],
    cfg: TrainConfig,
    iterations: int | None = None,
    tracer: AccessTracer | None = None,
) -> PassResult:
    """Pass 1 followed by ``iterations`` downward/upward rounds.

    ``no_bidir`` stops after pass 1.

    Raises:
        ConfigError: ``iterations`` < 1.
    """
    iterations = cfg.iterations if iterations is None else iterations
    if iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {iterations}")
    attention, state = upward_pass(document, params, vocab, label_names, cfg)
    first = state.doc
    states = [state]
    if not cfg.no_bidir:
        for _ in range(iterations):
            state = upward_reencode(document, downward_update(state, params, cfg), params, cfg, tracer)
            states.append(state)
    return PassResult(
        attention=attention,
        selected=state.graph.sentence_ids,
        graph=state.graph,
        first=first,
        final=state.doc,
        states=states,
    )


def two_pass_encode(
    document: Document,
    params: ModelParams,
    vocab: Vocab,
    label_names: list[str] | tuple[str, ...],
    cfg: TrainConfig,
    tracer: AccessTracer | None = None,
) -> DocEncoding:
    """Final document encoding after one downward/upward round."""
    return run_passes(document, params, vocab, label_names, cfg, 1, tracer).final


def iterate_updates(
    document: Document,
    params: ModelParams,
    vocab: Vocab,
    label_names: list[str] | tuple[str, ...],
    cfg: TrainConfig,
    rounds: int,
    tracer: AccessTracer | None = None,
) -> DocEncoding:
    """Final document encoding after ``rounds`` downward/upward rounds."""
    return run_passes(document, params, vocab, label_names, cfg, rounds, tracer).final
