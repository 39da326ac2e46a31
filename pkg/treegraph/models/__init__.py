"""Data models for treegraph: syntax trees, documents, vocabulary, parameters."""

from .document import Document, LabelSet, Sentence, Task
from .params import (
    BranchParams,
    DocEncoderParams,
    DownwardParams,
    DownwardStage,
    FFNParams,
    GATHead,
    GATParams,
    HeadParams,
    ModelParams,
    ParamGroup,
    TreeTransformerParams,
)
from .tree import ConstNode, ConstTree, DepNode, DepTree
from .vocab import UNK_ID, EmbeddingTable, Vocab, stable_hash

__all__ = [
    "ConstNode",
    "ConstTree",
    "DepNode",
    "DepTree",
    "Sentence",
    "Document",
    "LabelSet",
    "Task",
    "Vocab",
    "EmbeddingTable",
    "UNK_ID",
    "stable_hash",
    "ParamGroup",
    "FFNParams",
    "BranchParams",
    "TreeTransformerParams",
    "GATHead",
    "GATParams",
    "DocEncoderParams",
    "DownwardStage",
    "DownwardParams",
    "HeadParams",
    "ModelParams",
]
