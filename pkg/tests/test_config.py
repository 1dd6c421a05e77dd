import json

import pytest

from training.config import TrainConfig, get_profile


class TestProfiles:
    @pytest.mark.parametrize("profile, budgets", [
        ("cnndm", {"L_E": 3, "L_C": 58}),
        ("newsroom", {"L_E": 2, "L_C": 26}),
        ("XSum", {"L_E": 2, "L_C": 24}),
    ])
    def test_budgets(self, profile, budgets):
        assert get_profile(profile) == budgets

    def test_unknown_profile(self):
        with pytest.raises(ValueError):
            get_profile("duc")


class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert config.learning_rate == 0.01
        assert config.batch_size == 3
        assert config.grad_clip_norm == 2.0
        assert (config.w_cov, config.w_flu) == (1.0, 2.0)
        assert config.validate() is config

    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"learning_rate": 0.001, "L_C": 30, "schedule": "staged"}))
        base = TrainConfig().with_profile("newsroom")
        config = TrainConfig.from_file(str(path), base=base, L_C=None, epochs=4)
        assert config.learning_rate == 0.001
        assert config.L_E == 2
        assert config.L_C == 30
        assert config.epochs == 4
        assert config.schedule == "staged"

    def test_unknown_file_key(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"learning_rat": 0.1}))
        with pytest.raises(ValueError, match="learning_rat"):
            TrainConfig.from_file(str(path))

    @pytest.mark.parametrize("values, key", [
        ({"L_E": "3"}, "L_E"),
        ({"batch_size": 2.5}, "batch_size"),
        ({"learning_rate": "fast"}, "learning_rate"),
        ({"seed": True}, "seed"),
        ({"out_dir": None}, "out_dir"),
    ])
    def test_file_value_types(self, tmp_path, values, key):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(values))
        with pytest.raises(ValueError, match=key):
            TrainConfig.from_file(str(path))

    def test_file_ints_accepted_for_floats(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"learning_rate": 1, "max_documents": None, "train_path": "a.jsonl"}))
        config = TrainConfig.from_file(str(path))
        assert config.learning_rate == 1.0 and isinstance(config.learning_rate, float)
        assert config.train_path == "a.jsonl"

    @pytest.mark.parametrize("overrides", [
        {"learning_rate": 0.0},
        {"w_flu": -1.0},
        {"schedule": "alternating"},
        {"hidden_size": 5, "num_heads": 4},
        {"lm": "bert"},
    ])
    def test_validation(self, overrides):
        with pytest.raises(ValueError):
            TrainConfig().with_overrides(**overrides).validate()

    def test_dict_round_trip(self):
        config = TrainConfig(seed=7, out_dir="runs/x")
        assert TrainConfig(**config.to_dict()) == config
