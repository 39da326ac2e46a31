"""Tree Transformer encoder for dependency and constituency parses.

Nodes are encoded bottom-up: a node's state is computed from its own
initial vector (dependency trees only) and the already encoded states of
its children. A sentence representation is the average of the dependency
root state and the constituency root state.
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from treegraph.exceptions import CorpusError, ShapeError
from treegraph.models import BranchParams, ConstTree, DepTree, Sentence, TreeTransformerParams
from treegraph.numeric import Tensor, ops

from .layers import feed_forward

logger = logging.getLogger(__name__)

# on_node(kind, node_key) where kind is "dep" or "const"
NodeHook = Callable[[str, int], None]


@dataclass
class SentenceEncoding:
    """Dependency-channel, constituency-channel and combined sentence vectors."""

    h_d: Tensor
    h_c: Tensor
    h: Tensor


def branch_attention(
    X: Tensor,
    branches: Sequence[BranchParams],
    attention_out: list[np.ndarray] | None = None,
) -> Tensor:
    """Multi-branch attention over the k rows of ``X``.

    Each branch attends with scaled dot products, adds a residual through
    ``Wb``, layer-normalizes, scales by ``kappa`` and passes the result
    through its position-wise FFN. Branch outputs are summed with their
    ``alpha`` weights.

    Args:
        X: k x d matrix of node states.
        branches: Branch weights.
        attention_out: If given, each branch's k x k weight matrix is appended.

    Returns:
        k x d matrix.
    """
    if X.data.ndim != 2 or X.shape[0] == 0:
        raise ShapeError("branch_attention", X.shape)
    k, d = X.shape
    total = None
    for branch in branches:
        V = X @ branch.Wv
        if k == 1:
            # a lone row attends to itself with weight exactly 1
            if attention_out is not None:
                attention_out.append(np.ones((1, 1)))
            B = V
        else:
            Q = X @ branch.Wq
            K = X @ branch.Wk
            weights = ops.softmax(ops.scale(Q @ ops.transpose(K), 1.0 / math.sqrt(d)), axis=-1)
            if attention_out is not None:
                attention_out.append(weights.data)
            B = weights @ V
        normed = ops.layer_norm(ops.add(B @ branch.Wb, B), branch.ln_gain, branch.ln_bias)
        term = ops.mul(feed_forward(ops.mul(normed, branch.kappa), branch.pcnn), branch.alpha)
        total = term if total is None else ops.add(total, term)
    return total


def encode_tree_node(
    parent_init: Tensor | None,
    children: Sequence[Tensor],
    params: TreeTransformerParams,
    attention_out: list[np.ndarray] | None = None,
) -> Tensor:
    """Encode one node from its initial vector and its children's states.

    Dependency nodes pass their word vector as ``parent_init``; constituency
    nodes pass ``None`` and rely on their children alone.

    Raises:
        CorpusError: A node with neither an initial vector nor children.
    """
    rows = ([parent_init] if parent_init is not None else []) + list(children)
    if not rows:
        raise CorpusError("tree node has no children and no initial vector")
    X = ops.stack(rows)
    attended = ops.mean(branch_attention(X, params.branches, attention_out), axis=0)
    pooled = ops.mean(X, axis=0)
    return ops.tanh(ops.affine(ops.add(attended, pooled), params.W, params.b))


def encode_dependency(
    tree: DepTree,
    words: Tensor,
    params: TreeTransformerParams,
    on_node: NodeHook | None = None,
) -> Tensor:
    """Root state of a dependency tree whose node i starts from row i of ``words``."""
    states: dict[int, Tensor] = {}
    for index in tree.postorder():
        node = tree.nodes[index]
        states[index] = encode_tree_node(
            ops.row(words, index), [states[c] for c in node.children], params
        )
        if on_node is not None:
            on_node("dep", index)
    return states[tree.root]


def encode_constituency(
    tree: ConstTree,
    words: Tensor,
    params: TreeTransformerParams,
    on_node: NodeHook | None = None,
) -> Tensor:
    """Root state of a constituency tree; leaf states are word vectors."""
    states: dict[int, Tensor] = {}
    for node in tree.postorder():
        if node.is_leaf:
            states[id(node)] = ops.row(words, node.token)
            continue
        if not node.children:
            raise CorpusError(f"constituency node {node.label!r} has no children")
        states[id(node)] = encode_tree_node(None, [states[id(c)] for c in node.children], params)
        if on_node is not None:
            on_node("const", id(node))
    return states[id(tree.root)]


def encode_sentence(
    sentence: Sentence,
    words_d: Tensor,
    words_c: Tensor,
    dtt: TreeTransformerParams,
    ctt: TreeTransformerParams,
    no_dtt: bool = False,
    no_ctt: bool = False,
    on_node: NodeHook | None = None,
) -> SentenceEncoding:
    """Encode a sentence through both tree channels.

    Args:
        sentence: Tokens and parses.
        words_d: n x d word vectors feeding the dependency tree.
        words_c: n x d word vectors feeding the constituency tree.
        dtt: Dependency Tree Transformer weights.
        ctt: Constituency Tree Transformer weights.
        no_dtt: Skip the dependency channel and reuse the constituency state.
        no_ctt: Skip the constituency channel and reuse the dependency state.
        on_node: Called after every internal node is encoded.

    Returns:
        The channel states and their average.

    Raises:
        ShapeError: Word matrices that do not have one row per token.
    """
    n = len(sentence)
    for words in (words_d, words_c):
        if words.data.ndim != 2 or words.shape[0] != n:
            raise ShapeError("encode_sentence", words.shape, (n,))

    if no_dtt and no_ctt:
        h_d = h_c = ops.scale(ops.add(ops.mean(words_d, axis=0), ops.mean(words_c, axis=0)), 0.5)
    elif no_ctt:
        h_d = h_c = encode_dependency(sentence.dep, words_d, dtt, on_node)
    elif no_dtt:
        h_d = h_c = encode_constituency(sentence.cons, words_c, ctt, on_node)
    else:
        h_d = encode_dependency(sentence.dep, words_d, dtt, on_node)
        h_c = encode_constituency(sentence.cons, words_c, ctt, on_node)
    return SentenceEncoding(h_d=h_d, h_c=h_c, h=ops.scale(ops.add(h_d, h_c), 0.5))
