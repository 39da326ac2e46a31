"""Tests for chunk analysis and ablation variants."""

import pytest

from treegraph.exceptions import ConfigError
from treegraph.services import (
    ABLATION_VARIANTS,
    ablate,
    chunk_analysis,
    chunk_bounds,
    compare_ablations,
    parse_ablation_flags,
    planted_corpus,
    selection_fractions,
    train,
)


class TestChunkBounds:
    @pytest.mark.parametrize(
        "n, expected",
        [
            (9, [(0, 3), (3, 6), (6, 9)]),
            (4, [(0, 2), (2, 3), (3, 4)]),
            (5, [(0, 2), (2, 4), (4, 5)]),
            (2, [(0, 1), (1, 2), (2, 2)]),
            (1, [(0, 1), (1, 1), (1, 1)]),
        ],
    )
    def test_bounds(self, n, expected):
        assert chunk_bounds(n) == expected

    def test_cover_every_sentence_once(self):
        for n in range(1, 30):
            covered = [i for start, stop in chunk_bounds(n) for i in range(start, stop)]
            assert covered == list(range(n))


class TestSelectionFractions:
    def test_everything_selected(self):
        assert selection_fractions([(3, [0, 1, 2])]).fractions == (1.0, 1.0, 1.0)

    def test_short_documents_skip_empty_chunks(self):
        report = selection_fractions([(1, [0]), (3, [0])])
        assert report.fractions == (1.0, 0.0, 0.0)
        assert report.documents == (2, 1, 1)

    def test_partial_chunks(self):
        report = selection_fractions([(6, [0, 5]), (6, [1, 2, 3])])
        assert report.fractions == pytest.approx((0.5, 0.5, 0.25))

    def test_first_chunk_signal(self):
        selections = [(n, list(range(-(-n // 3)))) for n in range(3, 9)]
        first, middle, last = selection_fractions(selections).fractions
        assert first == 1.0
        assert first - middle >= 0.2

    def test_no_documents(self):
        assert selection_fractions([]).fractions == (0.0, 0.0, 0.0)

    def test_model_selection(self, model, corpus):
        report = chunk_analysis(model, corpus)
        assert len(report.fractions) == 3
        assert all(0.0 <= f <= 1.0 for f in report.fractions)
        assert report.documents[0] == len(corpus)


class TestAblationFlags:
    def test_parse(self):
        assert parse_ablation_flags(" no_gat , ,no_ctt") == ("no_gat", "no_ctt")
        assert parse_ablation_flags(None) == ()
        assert parse_ablation_flags("") == ()

    def test_ablate(self, cfg):
        variant = ablate(cfg, ["no_gat", "no_gat", "no_bidir"])
        assert variant.ablations == ("no_gat", "no_bidir")
        assert variant.no_gat and variant.no_bidir
        assert not variant.no_ctt

    def test_unknown_flag(self, cfg):
        with pytest.raises(ConfigError):
            ablate(cfg, ["no_words"])

    def test_variants_use_known_flags(self, cfg):
        for flags in ABLATION_VARIANTS.values():
            ablate(cfg, flags)

    def test_every_variant_trains(self, corpus, cfg):
        quick = cfg.with_overrides(max_epochs=1)
        for name, flags in ABLATION_VARIANTS.items():
            result = train(corpus, ablate(quick, flags))
            assert len(result.history) == 1, name

    def test_compare_full_and_no_bidir(self, corpus, cfg):
        rows = compare_ablations(
            corpus, cfg.with_overrides(max_epochs=1), {"full": (), "no_bidir": ("no_bidir",)}
        )
        assert [row.variant for row in rows] == ["full", "no_bidir"]
        assert all(row.metric == "accuracy" and 0.0 <= row.mean <= 1.0 for row in rows)


@pytest.mark.slow
class TestChunkSignal:
    def test_first_chunk_plants_are_selected(self):
        from treegraph.config import config

        # two-label best scores never fall below 0.5
        cfg = config["development"].with_overrides(tau=0.65)
        corpus = planted_corpus(
            n_docs=40, sentences=(3, 6), sentence_length=(3, 6), seed=0, plant="first_chunk"
        )
        result = train(corpus, cfg, validation=corpus)
        first, middle, _ = chunk_analysis(result.model, corpus).fractions
        assert first - middle >= 0.2
