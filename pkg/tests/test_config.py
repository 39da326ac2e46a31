"""Tests for configuration presets, files and overrides."""

import json

import pytest

from treegraph.config import TrainConfig, config, load_config
from treegraph.exceptions import ConfigError


class TestPresets:
    def test_defaults(self):
        cfg = config["default"]
        assert cfg.lr == 0.1
        assert cfg.batch_size == 10
        assert cfg.gat_heads == 6
        assert cfg.ablations == ()
        assert cfg.selector_weight == 0.0

    def test_development_trains_the_selector(self):
        cfg = config["development"]
        assert cfg.selector_weight > 0
        assert cfg.label_softmax_axis == "labels"
        assert cfg.lr < config["default"].lr

    def test_every_preset_is_valid(self):
        for cfg in config.values():
            cfg.validate()

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            load_config(preset="production")


class TestLoadConfig:
    def test_file_overrides_preset(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"d": 16, "ablations": ["no_gat"], "labels": ["a", "b"]}))
        cfg = load_config(path, "testing")
        assert cfg.d == 16
        assert cfg.branches == 2
        assert cfg.ablations == ("no_gat",)
        assert cfg.labels == ("a", "b")

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"learning_rate": 0.5}))
        with pytest.raises(ConfigError, match="learning_rate"):
            load_config(path)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("TREEGRAPH_SEED", "42")
        monkeypatch.setenv("TREEGRAPH_THREADS", "3")
        cfg = load_config()
        assert cfg.seed == 42
        assert cfg.threads == 3

    def test_environment_must_be_integer(self, monkeypatch):
        monkeypatch.setenv("TREEGRAPH_SEED", "many")
        with pytest.raises(ConfigError):
            load_config()


class TestValidation:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"tau": 0.0},
            {"tau": 1.0},
            {"batch_size": 0},
            {"iterations": 0},
            {"task": "regression"},
            {"ablations": ("no_words",)},
            {"gat_combine": "concat", "d": 10, "gat_heads": 3},
            {"embedding_backend": "file"},
            {"folds": 1},
            {"label_softmax_axis": "rows"},
            {"seed": -1},
            {"seed": 2**64},
            {"seed": 1.5},
            {"selector_weight": -0.1},
            {"selector_weight": 1.0, "label_softmax_axis": "sentences"},
        ],
    )
    def test_rejects(self, overrides):
        with pytest.raises(ConfigError):
            TrainConfig().with_overrides(**overrides)

    def test_largest_seed_is_accepted(self):
        assert TrainConfig().with_overrides(seed=2**64 - 1).seed == 2**64 - 1

    def test_none_overrides_are_ignored(self):
        assert TrainConfig().with_overrides(seed=None, tau=None) == TrainConfig()

    def test_unknown_override(self):
        with pytest.raises(ConfigError):
            TrainConfig().with_overrides(colour="red")

    def test_to_dict_round_trip(self):
        cfg = TrainConfig(ablations=("no_ctt",), labels=("x", "y"))
        assert TrainConfig(**cfg.to_dict()) == cfg
