"""Services for treegraph."""

from .analysis import (
    ABLATION_VARIANTS,
    AblationRow,
    ChunkReport,
    ablate,
    chunk_analysis,
    chunk_bounds,
    compare_ablations,
    parse_ablation_flags,
    selection_fractions,
)
from .checkpoint import CHECKPOINT_VERSION, load_checkpoint, save_checkpoint
from .classifier import GraphTreeClassifier, classify, decide, loss, selection_loss
from .corpus import (
    build_vocab,
    document_from_dict,
    document_to_dict,
    embed_tokens,
    init_embedding_table,
    label_embedding,
    label_embeddings,
    load_corpus,
    load_embedding_file,
    save_corpus,
)
from .crossval import (
    TauSearch,
    best_tau,
    coarse_grid,
    cross_validate,
    fine_grid,
    stratified_folds,
    tune_tau,
)
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
from .propagation import (
    AccessTracer,
    PassResult,
    PassState,
    downward_update,
    iterate_updates,
    run_passes,
    two_pass_encode,
    upward_pass,
    upward_reencode,
)
from .synthetic import planted_corpus
from .training import (
    EpochRecord,
    Metrics,
    TrainResult,
    batch_gradients,
    evaluate,
    primary_metric,
    score_predictions,
    split_train_validation,
    stratify_keys,
    train,
)
from .tree_encoder import (
    SentenceEncoding,
    branch_attention,
    encode_constituency,
    encode_dependency,
    encode_sentence,
    encode_tree_node,
)
from .treebank import parse_conllu, parse_constituency, serialize_conllu, serialize_constituency

__all__ = [
    "parse_constituency",
    "serialize_constituency",
    "parse_conllu",
    "serialize_conllu",
    "load_corpus",
    "save_corpus",
    "document_from_dict",
    "document_to_dict",
    "build_vocab",
    "init_embedding_table",
    "load_embedding_file",
    "embed_tokens",
    "label_embedding",
    "label_embeddings",
    "SentenceEncoding",
    "branch_attention",
    "encode_tree_node",
    "encode_dependency",
    "encode_constituency",
    "encode_sentence",
    "LabelAttention",
    "labelwise_scores",
    "select_sentences",
    "EdgeType",
    "DocGraph",
    "build_doc_graph",
    "gat_layer",
    "DocEncoding",
    "encode_document",
    "AccessTracer",
    "PassState",
    "PassResult",
    "upward_pass",
    "downward_update",
    "upward_reencode",
    "run_passes",
    "two_pass_encode",
    "iterate_updates",
    "GraphTreeClassifier",
    "classify",
    "loss",
    "selection_loss",
    "decide",
    "Metrics",
    "EpochRecord",
    "TrainResult",
    "score_predictions",
    "evaluate",
    "primary_metric",
    "stratify_keys",
    "split_train_validation",
    "batch_gradients",
    "train",
    "stratified_folds",
    "cross_validate",
    "coarse_grid",
    "fine_grid",
    "best_tau",
    "TauSearch",
    "tune_tau",
    "chunk_bounds",
    "selection_fractions",
    "ChunkReport",
    "chunk_analysis",
    "ablate",
    "parse_ablation_flags",
    "ABLATION_VARIANTS",
    "AblationRow",
    "compare_ablations",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_VERSION",
    "planted_corpus",
]
