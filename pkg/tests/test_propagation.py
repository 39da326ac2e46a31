"""Tests for the upward, downward and re-encoding passes."""

from dataclasses import replace

import numpy as np
import pytest

from treegraph.exceptions import ConfigError, GraphError
from treegraph.models import Document, DownwardParams, FFNParams, GATParams
from treegraph.numeric import Tensor, grad_check_params, ops
from treegraph.services import (
    AccessTracer,
    downward_update,
    gat_layer,
    iterate_updates,
    planted_corpus,
    run_passes,
    two_pass_encode,
    upward_pass,
)
from treegraph.services.layers import feed_forward
from treegraph.services.synthetic import make_sentence

LABELS = ("alpha", "beta")


@pytest.fixture
def documents():
    return planted_corpus(
        n_docs=50, n_classes=2, vocab_size=12, sentences=(1, 5), sentence_length=(1, 5), seed=11
    )


@pytest.fixture
def document(documents):
    return next(doc for doc in documents if len(doc) >= 3)


class TestTwoPassIdentity:
    def test_identity_downward_reproduces_first_pass(self, params, cfg, documents):
        model_params, vocab = params
        model_params.downward = DownwardParams.identity(cfg.d)
        for doc in documents:
            result = run_passes(doc, model_params, vocab, LABELS, cfg, iterations=1)
            assert np.array_equal(result.first.h.data, result.final.h.data)
            first, second = result.states
            assert np.array_equal(first.h_d.data, second.h_d.data)
            assert np.array_equal(first.h_c.data, second.h_c.data)

    def test_learned_downward_changes_output(self, params, cfg, document):
        model_params, vocab = params
        result = run_passes(document, model_params, vocab, LABELS, cfg, iterations=1)
        assert not np.allclose(result.first.h.data, result.final.h.data)


class TestIdentityStagesOnTheGraph:
    """Identity weights run through graph attention and the FFN instead of bypassing them."""

    def test_self_loops_reproduce_features(self, rng, cfg):
        feats = Tensor(rng.normal(size=(5, cfg.d)))
        out = gat_layer(feats, {i: [i] for i in range(5)}, GATParams.identity(cfg.d))
        np.testing.assert_allclose(out.data, feats.data, rtol=1e-12, atol=1e-12)
        ffn = feed_forward(feats, FFNParams.identity(cfg.d, "identity"))
        np.testing.assert_allclose(ffn.data, feats.data, rtol=1e-12, atol=1e-12)

    def test_single_source_words_take_their_sentence_state(self, params, cfg):
        model_params, vocab = params
        model_params.downward = DownwardParams.identity(cfg.d, bypass=False)
        no_self = cfg.with_overrides(word_self_edge=False)
        doc = Document(
            id="two",
            sentences=[make_sentence(["alpha", "w1"]), make_sentence(["beta", "w2"])],
            labels=["alpha"],
        )
        _, state = upward_pass(doc, model_params, vocab, LABELS, no_self)
        assert state.graph.words == ["alpha", "w1", "beta", "w2"]
        updated = downward_update(state, model_params, no_self)
        doc_h = state.doc.h.data
        for before, after, words in (
            (state.h_d, updated.h_d, updated.words_d),
            (state.h_c, updated.h_c, updated.words_c),
        ):
            # a = 0 spreads attention evenly over the document node and the sentence itself
            np.testing.assert_allclose(after.data, (before.data + doc_h) / 2, rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(words.data[0], after.data[0], rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(words.data[1], after.data[0], rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(words.data[2], after.data[1], rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(words.data[3], after.data[1], rtol=1e-12, atol=1e-12)

    def test_shared_word_over_equal_sentences(self, params, cfg):
        model_params, vocab = params
        model_params.downward = DownwardParams.identity(cfg.d, bypass=False)
        no_self = cfg.with_overrides(word_self_edge=False)
        twice = Document(
            id="twice", sentences=[make_sentence(["alpha", "w1"])] * 2, labels=["alpha"]
        )
        once = Document(id="once", sentences=[make_sentence(["alpha", "w1"])], labels=["alpha"])
        _, state_twice = upward_pass(twice, model_params, vocab, LABELS, no_self)
        _, state_once = upward_pass(once, model_params, vocab, LABELS, no_self)
        words_twice = downward_update(state_twice, model_params, no_self).words_d.data
        words_once = downward_update(state_once, model_params, no_self).words_d.data
        np.testing.assert_allclose(words_twice, words_once, rtol=1e-12, atol=1e-12)


class TestRunPasses:
    def test_single_round_is_two_pass(self, params, cfg, document):
        model_params, vocab = params
        one = run_passes(document, model_params, vocab, LABELS, cfg, iterations=1).final
        assert np.array_equal(one.h.data, two_pass_encode(document, model_params, vocab, LABELS, cfg).h.data)

    def test_second_round_changes_output(self, params, cfg, document):
        model_params, vocab = params
        one = run_passes(document, model_params, vocab, LABELS, cfg, iterations=1)
        two = run_passes(document, model_params, vocab, LABELS, cfg, iterations=2)
        assert len(two.states) == 3
        assert [s.iteration for s in two.states] == [0, 1, 2]
        assert not np.allclose(one.final.h.data, two.final.h.data)
        np.testing.assert_array_equal(
            two.final.h.data, iterate_updates(document, model_params, vocab, LABELS, cfg, 2).h.data
        )

    def test_selection_fixed_after_first_pass(self, params, cfg, document):
        model_params, vocab = params
        result = run_passes(document, model_params, vocab, LABELS, cfg, iterations=3)
        assert all(state.graph is result.graph for state in result.states)
        assert result.selected == result.graph.sentence_ids

    @pytest.mark.parametrize("iterations", [0, -1])
    def test_iterations_must_be_positive(self, params, cfg, document, iterations):
        model_params, vocab = params
        with pytest.raises(ConfigError):
            run_passes(document, model_params, vocab, LABELS, cfg, iterations=iterations)

    def test_deterministic(self, params, cfg, document):
        model_params, vocab = params
        one = run_passes(document, model_params, vocab, LABELS, cfg).final.h.data
        two = run_passes(document, model_params, vocab, LABELS, cfg).final.h.data
        assert np.array_equal(one, two)

    def test_single_sentence_document(self, params, cfg):
        model_params, vocab = params
        doc = Document(id="one", sentences=[make_sentence(["alpha", "w1"])], labels=["alpha"])
        result = run_passes(doc, model_params, vocab, LABELS, cfg)
        assert result.selected == [0]
        assert result.final.h.shape == (cfg.d,)
        assert np.all(np.isfinite(result.final.h.data))

    def test_without_bidirectional_rounds(self, params, cfg, document):
        model_params, vocab = params
        result = run_passes(document, model_params, vocab, LABELS, replace(cfg, ablations=("no_bidir",)))
        assert result.first is result.final
        assert len(result.states) == 1

    def test_high_threshold_keeps_one_sentence(self, params, cfg, document):
        model_params, vocab = params
        result = run_passes(document, model_params, vocab, LABELS, cfg.with_overrides(tau=0.99))
        assert len(result.selected) >= 1
        assert result.final.h.shape == (cfg.d,)


class TestDownwardUpdate:
    def test_requires_document_state(self, params, cfg, document):
        model_params, vocab = params
        _, state = upward_pass(document, model_params, vocab, LABELS, cfg)
        with pytest.raises(GraphError):
            downward_update(replace(state, doc=None), model_params, cfg)

    def test_shapes_follow_graph(self, params, cfg, document):
        model_params, vocab = params
        _, state = upward_pass(document, model_params, vocab, LABELS, cfg)
        updated = downward_update(state, model_params, cfg)
        K, W = state.graph.num_sentences, len(state.graph.words)
        assert updated.h_d.shape == updated.h_c.shape == (K, cfg.d)
        assert updated.words_d.shape == updated.words_c.shape == (W, cfg.d)
        assert updated.doc is None
        assert not np.allclose(updated.words_d.data, updated.words_c.data)


class TestAccessTracer:
    def test_reads_only_selected_sentences(self, params, cfg, documents):
        model_params, vocab = params
        strict = cfg.with_overrides(tau=0.6)
        for doc in documents[:20]:
            tracer = AccessTracer()
            result = run_passes(doc, model_params, vocab, LABELS, strict, tracer=tracer)
            assert tracer.sentences == set(result.selected)
            assert tracer.words == set(result.graph.words)
            unselected = set(range(len(doc))) - set(result.selected)
            assert not tracer.sentences & unselected


class TestGradients:
    def test_every_parameter_group_gets_gradient(self, model, corpus):
        names = {id(t): name for name, t in model.params.named_parameters()}
        value, pairs = model.gradients(corpus[0])
        assert np.isfinite(value)
        touched = {names[id(t)].split(".")[0] for t, g in pairs if np.any(g != 0)}
        assert touched == {"embeddings", "dtt", "ctt", "doc", "downward", "head"}

    def test_two_pass_matches_finite_differences(self, params, cfg):
        model_params, vocab = params
        doc = Document(
            id="g",
            sentences=[make_sentence(["alpha", "w1"]), make_sentence(["w2", "w1", "w3"])],
            labels=["alpha"],
        )
        r = np.random.default_rng(5).uniform(-1, 1, size=cfg.d)

        def objective():
            final = two_pass_encode(doc, model_params, vocab, LABELS, cfg)
            return ops.sum(ops.mul(final.h, r))

        tensors = [
            model_params.dtt.b,
            model_params.downward.sent_to_word_c.ffn.b2,
            model_params.downward.doc_to_sent_d.gat.heads[0].a,
        ]
        assert grad_check_params(objective, tensors) < 1e-4
