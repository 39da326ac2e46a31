"""Learnable parameter groups of the classifier.

Every group is a dataclass whose Tensor fields (and nested groups) are
enumerated by :meth:`ParamGroup.named_parameters` with dotted names, which
are also the checkpoint keys.
"""

from collections.abc import Iterator
from dataclasses import dataclass, fields

import numpy as np

from treegraph.numeric import Tensor

from .vocab import EmbeddingTable


def glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def _param(data, name: str | None = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


class ParamGroup:
    """Mixin enumerating the tensors of a parameter dataclass."""

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for f in fields(self):
            value = getattr(self, f.name)
            name = f"{prefix}{f.name}"
            if isinstance(value, Tensor):
                yield name, value
            elif isinstance(value, ParamGroup):
                yield from value.named_parameters(f"{name}.")
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, ParamGroup):
                        yield from item.named_parameters(f"{name}.{i}.")

    def parameters(self) -> list[Tensor]:
        return [tensor for _, tensor in self.named_parameters()]


@dataclass
class FFNParams(ParamGroup):
    """Two position-wise affine maps with an activation between them."""

    W1: Tensor
    b1: Tensor
    W2: Tensor
    b2: Tensor
    activation: str = "relu"

    @classmethod
    def init(cls, rng: np.random.Generator, d: int, inner: int) -> "FFNParams":
        return cls(
            W1=_param(glorot(rng, d, inner)),
            b1=_param(np.zeros(inner)),
            W2=_param(glorot(rng, inner, d)),
            b2=_param(np.zeros(d)),
        )

    @classmethod
    def identity(cls, d: int, activation: str = "relu") -> "FFNParams":
        return cls(
            W1=_param(np.eye(d)),
            b1=_param(np.zeros(d)),
            W2=_param(np.eye(d)),
            b2=_param(np.zeros(d)),
            activation=activation,
        )


@dataclass
class BranchParams(ParamGroup):
    """One attention branch of a Tree Transformer block."""

    Wq: Tensor
    Wk: Tensor
    Wv: Tensor
    Wb: Tensor
    kappa: Tensor
    alpha: Tensor
    ln_gain: Tensor
    ln_bias: Tensor
    pcnn: FFNParams

    @classmethod
    def init(cls, rng: np.random.Generator, d: int, n_branches: int) -> "BranchParams":
        return cls(
            Wq=_param(glorot(rng, d, d)),
            Wk=_param(glorot(rng, d, d)),
            Wv=_param(glorot(rng, d, d)),
            Wb=_param(glorot(rng, d, d)),
            kappa=_param(np.array(1.0)),
            alpha=_param(np.array(1.0 / n_branches)),
            ln_gain=_param(np.ones(d)),
            ln_bias=_param(np.zeros(d)),
            pcnn=FFNParams.init(rng, d, d),
        )


@dataclass
class TreeTransformerParams(ParamGroup):
    """Branches plus the output affine applied to every tree node."""

    branches: list[BranchParams]
    W: Tensor
    b: Tensor

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @classmethod
    def init(cls, rng: np.random.Generator, d: int, n_branches: int) -> "TreeTransformerParams":
        return cls(
            branches=[BranchParams.init(rng, d, n_branches) for _ in range(n_branches)],
            W=_param(glorot(rng, d, d)),
            b=_param(np.zeros(d)),
        )


@dataclass
class GATHead(ParamGroup):
    W: Tensor
    a: Tensor

    @property
    def width(self) -> int:
        return self.W.shape[1]


@dataclass
class GATParams(ParamGroup):
    """Multi-head graph attention weights.

    ``combine`` is ``concat`` (head width d / heads) or ``mean`` (head
    width d). ``activation`` is the per-head output nonlinearity.
    """

    heads: list[GATHead]
    combine: str = "mean"
    activation: str = "tanh"
    slope: float = 0.2

    @classmethod
    def init(
        cls,
        rng: np.random.Generator,
        d: int,
        n_heads: int,
        combine: str = "mean",
        slope: float = 0.2,
    ) -> "GATParams":
        width = d // n_heads if combine == "concat" else d
        heads = [
            GATHead(W=_param(glorot(rng, d, width)), a=_param(glorot(rng, 2 * width, 1)[:, 0]))
            for _ in range(n_heads)
        ]
        return cls(heads=heads, combine=combine, slope=slope)

    @classmethod
    def identity(cls, d: int) -> "GATParams":
        """Single head with W = I, a = 0 and no output nonlinearity."""
        head = GATHead(W=_param(np.eye(d)), a=_param(np.zeros(2 * d)))
        return cls(heads=[head], combine="mean", activation="identity")


@dataclass
class DocEncoderParams(ParamGroup):
    """Upward sentence-to-document GAT followed by the document FFN."""

    gat: GATParams
    ffn: FFNParams


@dataclass
class DownwardStage(ParamGroup):
    """One GAT + FFN stage of the document-to-sentence-to-word update.

    A ``bypass`` stage returns its targets' input features unchanged.
    """

    gat: GATParams
    ffn: FFNParams
    bypass: bool = False

    @classmethod
    def init(cls, rng: np.random.Generator, d: int, n_heads: int, combine: str, slope: float):
        return cls(
            gat=GATParams.init(rng, d, n_heads, combine, slope),
            ffn=FFNParams.init(rng, d, 4 * d),
        )

    @classmethod
    def identity(cls, d: int, bypass: bool = True) -> "DownwardStage":
        """Identity GAT and FFN; with ``bypass=False`` they still run on the graph."""
        return cls(gat=GATParams.identity(d), ffn=FFNParams.identity(d, "identity"), bypass=bypass)


@dataclass
class DownwardParams(ParamGroup):
    """Channel-specific stages: document to sentence, then sentence to word."""

    doc_to_sent_d: DownwardStage
    doc_to_sent_c: DownwardStage
    sent_to_word_d: DownwardStage
    sent_to_word_c: DownwardStage

    @classmethod
    def init(cls, rng, d: int, n_heads: int, combine: str = "mean", slope: float = 0.2):
        return cls(*(DownwardStage.init(rng, d, n_heads, combine, slope) for _ in range(4)))

    @classmethod
    def identity(cls, d: int, bypass: bool = True) -> "DownwardParams":
        return cls(*(DownwardStage.identity(d, bypass) for _ in range(4)))


@dataclass
class HeadParams(ParamGroup):
    """Dense tanh layer then the output affine over L labels."""

    W_dense: Tensor
    b_dense: Tensor
    W_out: Tensor
    b_out: Tensor

    @classmethod
    def init(cls, rng: np.random.Generator, d: int, n_labels: int) -> "HeadParams":
        return cls(
            W_dense=_param(glorot(rng, d, d)),
            b_dense=_param(np.zeros(d)),
            W_out=_param(glorot(rng, d, n_labels)),
            b_out=_param(np.zeros(n_labels)),
        )


@dataclass
class ModelParams(ParamGroup):
    """All learnable weights of the classifier."""

    embeddings: EmbeddingTable
    dtt: TreeTransformerParams
    ctt: TreeTransformerParams
    doc: DocEncoderParams
    downward: DownwardParams
    head: HeadParams

    @classmethod
    def init(cls, rng: np.random.Generator, embeddings: EmbeddingTable, n_labels: int, cfg) -> "ModelParams":
        """Fresh parameters for a vocabulary-sized embedding table and L labels."""
        d = embeddings.d
        return cls(
            embeddings=embeddings,
            dtt=TreeTransformerParams.init(rng, d, cfg.branches),
            ctt=TreeTransformerParams.init(rng, d, cfg.branches),
            doc=DocEncoderParams(
                gat=GATParams.init(rng, d, cfg.gat_heads, cfg.gat_combine, cfg.leaky_slope),
                ffn=FFNParams.init(rng, d, cfg.ffn_inner),
            ),
            downward=DownwardParams.init(rng, d, cfg.gat_heads, cfg.gat_combine, cfg.leaky_slope),
            head=HeadParams.init(rng, d, n_labels),
        )

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        yield f"{prefix}embeddings", self.embeddings.weight
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, ParamGroup):
                yield from value.named_parameters(f"{prefix}{f.name}.")

    def trainable(self) -> dict[str, Tensor]:
        return {name: t for name, t in self.named_parameters() if t.requires_grad}

    def snapshot(self) -> dict[str, np.ndarray]:
        """Copies of every parameter's values, keyed by name."""
        return {name: t.data.copy() for name, t in self.named_parameters()}

    def restore(self, values: dict[str, np.ndarray]):
        for name, tensor in self.named_parameters():
            tensor.data = values[name].copy()
