"""Tests for the Tree Transformer encoder."""

import numpy as np
import pytest

from treegraph.exceptions import CorpusError, ShapeError
from treegraph.models import TreeTransformerParams
from treegraph.numeric import Tensor, grad_check_params, ops
from treegraph.services import (
    branch_attention,
    encode_constituency,
    encode_dependency,
    encode_sentence,
    encode_tree_node,
)
from treegraph.services.synthetic import make_sentence
from treegraph.services.treebank import parse_conllu, parse_constituency

D = 8


def np_layer_norm(x, gain, bias, eps=ops.LAYER_NORM_EPS):
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * gain + bias


def np_node(X: np.ndarray, params: TreeTransformerParams) -> np.ndarray:
    """Straight-line numpy encoding of one node from its stacked rows."""
    total = np.zeros_like(X)
    for br in params.branches:
        Q, K, V = X @ br.Wq.data, X @ br.Wk.data, X @ br.Wv.data
        scores = Q @ K.T / np.sqrt(X.shape[1])
        A = np.exp(scores - scores.max(axis=1, keepdims=True))
        A /= A.sum(axis=1, keepdims=True)
        B = A @ V
        normed = np_layer_norm(B @ br.Wb.data + B, br.ln_gain.data, br.ln_bias.data)
        f = br.pcnn
        hidden = np.maximum(normed * br.kappa.data @ f.W1.data + f.b1.data, 0.0)
        total += (hidden @ f.W2.data + f.b2.data) * br.alpha.data
    return np.tanh((total.mean(axis=0) + X.mean(axis=0)) @ params.W.data + params.b.data)


def np_dependency(tree, words: np.ndarray, params) -> np.ndarray:
    def visit(i):
        rows = [words[i]] + [visit(c) for c in tree.nodes[i].children]
        return np_node(np.stack(rows), params)

    return visit(tree.root)


@pytest.fixture
def tt(rng):
    return TreeTransformerParams.init(rng, D, 2)


@pytest.fixture
def tt_other(rng):
    return TreeTransformerParams.init(rng, D, 2)


class TestBranchAttention:
    def test_single_row_attends_to_itself(self, rng, tt):
        X = Tensor(rng.normal(size=(1, D)))
        weights = []
        branch_attention(X, tt.branches, weights)
        for w in weights:
            np.testing.assert_array_equal(w, [[1.0]])

    def test_single_row_matches_numpy_attention(self, rng, tt):
        X = rng.normal(size=(1, D))
        out = branch_attention(Tensor(X), tt.branches)
        expected = np.zeros_like(X)
        for br in tt.branches:
            B = X @ br.Wv.data
            normed = np_layer_norm(B @ br.Wb.data + B, br.ln_gain.data, br.ln_bias.data)
            f = br.pcnn
            hidden = np.maximum(normed * br.kappa.data @ f.W1.data + f.b1.data, 0.0)
            expected += (hidden @ f.W2.data + f.b2.data) * br.alpha.data
        np.testing.assert_allclose(out.data, expected, rtol=0, atol=1e-12)

    def test_single_row_query_and_key_get_no_gradient(self, rng, tt):
        X = Tensor(rng.normal(size=(1, D)))
        r = rng.uniform(-1, 1, size=(1, D))
        br = tt.branches[0]

        def objective():
            return ops.sum(ops.mul(branch_attention(X, tt.branches), r))

        assert grad_check_params(objective, [br.Wq, br.Wk, br.Wv]) < 1e-4
        np.testing.assert_array_equal(br.Wq.grad, np.zeros((D, D)))
        np.testing.assert_array_equal(br.Wk.grad, np.zeros((D, D)))
        assert np.any(br.Wv.grad != 0)

    def test_zero_alpha_gives_zero_output(self, rng, tt):
        for br in tt.branches:
            br.alpha.data = np.array(0.0)
        out = branch_attention(Tensor(rng.normal(size=(3, D))), tt.branches)
        np.testing.assert_array_equal(out.data, np.zeros((3, D)))

    def test_attention_rows_sum_to_one(self, rng, tt):
        weights = []
        branch_attention(Tensor(rng.normal(size=(4, D))), tt.branches, weights)
        assert len(weights) == 2
        for w in weights:
            assert w.shape == (4, 4)
            assert np.all(w >= 0)
            np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-12)

    def test_empty_input(self, tt):
        with pytest.raises(ShapeError):
            branch_attention(Tensor(np.zeros((0, D))), tt.branches)


class TestEncodeTreeNode:
    def test_matches_numpy_oracle(self, rng, tt):
        for k in range(1, 6):
            rows = [Tensor(r) for r in rng.normal(size=(k, D))]
            out = encode_tree_node(rows[0], rows[1:], tt)
            expected = np_node(np.stack([r.data for r in rows]), tt)
            np.testing.assert_allclose(out.data, expected, rtol=0, atol=1e-10)

    def test_zero_output_affine_gives_zero(self, rng, tt):
        tt.W.data = np.zeros((D, D))
        tt.b.data = np.zeros(D)
        out = encode_tree_node(None, [Tensor(rng.normal(size=D))], tt)
        np.testing.assert_array_equal(out.data, np.zeros(D))

    def test_bounded(self, rng, tt):
        out = encode_tree_node(Tensor(rng.normal(scale=10, size=D)), [], tt)
        assert np.all(np.abs(out.data) <= 1.0)

    def test_no_rows(self, tt):
        with pytest.raises(CorpusError):
            encode_tree_node(None, [], tt)


class TestTreeChannels:
    def test_dependency_matches_oracle(self, rng, tt):
        tree = parse_conllu("1 a 2 det\n2 b 0 root\n3 c 2 obj\n4 d 3 amod\n")
        words = rng.normal(size=(4, D))
        out = encode_dependency(tree, Tensor(words), tt)
        np.testing.assert_allclose(out.data, np_dependency(tree, words, tt), rtol=0, atol=1e-10)

    def test_dependency_visits_children_first(self, rng, tt):
        tree = parse_conllu("1 a 2 det\n2 b 0 root\n3 c 2 obj\n4 d 3 amod\n")
        seen = []
        encode_dependency(tree, Tensor(rng.normal(size=(4, D))), tt, lambda kind, key: seen.append(key))
        assert sorted(seen) == [0, 1, 2, 3]
        assert seen[-1] == tree.root
        for position, index in enumerate(seen):
            assert all(seen.index(c) < position for c in tree.nodes[index].children)

    def test_constituency_visits_internal_nodes_in_postorder(self, rng, tt):
        tree = parse_constituency("(S (NP (DT the) (NN cat)) (VP (VBZ sits)))")
        seen = []
        encode_constituency(tree, Tensor(rng.normal(size=(3, D))), tt, lambda kind, key: seen.append((kind, key)))
        expected = [("const", id(node)) for node in tree.postorder() if not node.is_leaf]
        assert seen == expected

    def test_constituency_single_leaf(self, rng, tt):
        tree = parse_constituency("(X hi)")
        words = rng.normal(size=(1, D))
        out = encode_constituency(tree, Tensor(words), tt)
        np.testing.assert_allclose(out.data, np_node(words, tt), rtol=0, atol=1e-10)


class TestEncodeSentence:
    def test_combined_state_is_channel_average(self, rng, tt, tt_other):
        sentence = make_sentence(["a", "b", "c"])
        enc = encode_sentence(
            sentence, Tensor(rng.normal(size=(3, D))), Tensor(rng.normal(size=(3, D))), tt, tt_other
        )
        np.testing.assert_array_equal(enc.h.data, (enc.h_d.data + enc.h_c.data) * 0.5)

    def test_swapping_channel_weights_changes_result(self, rng, tt, tt_other):
        sentence = make_sentence(["a", "b", "c"])
        words = Tensor(rng.normal(size=(3, D)))
        one = encode_sentence(sentence, words, words, tt, tt_other)
        two = encode_sentence(sentence, words, words, tt_other, tt)
        assert not np.allclose(one.h.data, two.h.data)

    def test_no_ctt_reuses_dependency_state(self, rng, tt, tt_other):
        sentence = make_sentence(["a", "b"])
        words = Tensor(rng.normal(size=(2, D)))
        enc = encode_sentence(sentence, words, words, tt, tt_other, no_ctt=True)
        assert enc.h_c is enc.h_d
        np.testing.assert_allclose(enc.h.data, enc.h_d.data, rtol=0, atol=1e-15)

    def test_no_dtt_reuses_constituency_state(self, rng, tt, tt_other):
        sentence = make_sentence(["a", "b"])
        words = Tensor(rng.normal(size=(2, D)))
        enc = encode_sentence(sentence, words, words, tt, tt_other, no_dtt=True)
        expected = encode_constituency(sentence.cons, words, tt_other)
        np.testing.assert_array_equal(enc.h_d.data, expected.data)

    def test_without_trees_uses_word_means(self, rng, tt, tt_other):
        sentence = make_sentence(["a", "b"])
        words_d, words_c = rng.normal(size=(2, D)), rng.normal(size=(2, D))
        enc = encode_sentence(sentence, Tensor(words_d), Tensor(words_c), tt, tt_other, no_dtt=True, no_ctt=True)
        np.testing.assert_allclose(enc.h.data, (words_d.mean(axis=0) + words_c.mean(axis=0)) / 2, atol=1e-12)

    def test_misaligned_rows(self, rng, tt, tt_other):
        sentence = make_sentence(["a", "b", "c"])
        with pytest.raises(ShapeError):
            encode_sentence(
                sentence, Tensor(rng.normal(size=(2, D))), Tensor(rng.normal(size=(3, D))), tt, tt_other
            )

    def test_gradients(self, rng, tt, tt_other):
        sentence = make_sentence(["a", "b", "c"])
        words_d = Tensor(rng.normal(size=(3, D)), requires_grad=True)
        words_c = Tensor(rng.normal(size=(3, D)), requires_grad=True)
        r = rng.uniform(-1, 1, size=D)

        def objective():
            enc = encode_sentence(sentence, words_d, words_c, tt, tt_other)
            return ops.sum(ops.mul(enc.h, r))

        params = [words_d, words_c, tt.W, tt.branches[0].Wq, tt_other.branches[1].kappa]
        assert grad_check_params(objective, params) < 1e-4
