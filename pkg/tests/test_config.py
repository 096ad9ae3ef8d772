import pytest

from triplewise.config import (
    ConfigError,
    TrainConfig,
    config_from_dict,
    desk_preset,
    load_config,
    parse_config_text,
)


class TestTrainConfig:
    def test_paper_defaults(self):
        config = TrainConfig()
        assert config.vocab_size == 40000
        assert config.max_len == 30
        assert config.embed_dim == 300
        assert config.hidden == 300
        assert config.latent_dim == 100
        assert config.dropout == 0.2
        assert config.batch_size == 64
        assert config.learning_rate == 1e-4
        assert config.word_drop == 0.25

    def test_desk_preset_is_small(self):
        config = desk_preset()
        assert config.preset == "desk"
        assert config.hidden < 300 and config.latent_dim < 100

    @pytest.mark.parametrize("field,value", [
        ("vocab_size", 0), ("max_len", 1), ("learning_rate", 0.0),
        ("dropout", 1.0), ("dropout", -0.1), ("word_drop", 1.5),
        ("anneal_steps", -1), ("batch_size", 0),
    ])
    def test_invalid_values_rejected(self, field, value):
        with pytest.raises(ConfigError):
            TrainConfig(**{field: value})

    def test_round_trip_through_dict(self):
        config = desk_preset(seed=9)
        assert config_from_dict(config.to_dict()) == config

    def test_unknown_dict_key_rejected(self):
        with pytest.raises(ConfigError) as err:
            config_from_dict({"bogus_field": 1})
        assert "bogus_field" in str(err.value)


class TestConfigFiles:
    def test_preset_inheritance_with_overrides(self):
        config = parse_config_text("preset = desk\nseed = 12\nbatch_size=8\n")
        base = desk_preset()
        assert config.seed == 12
        assert config.batch_size == 8
        assert config.hidden == base.hidden

    def test_comments_and_blank_lines_ignored(self):
        config = parse_config_text("# a comment\n\npreset = paper\nseed = 3 # trailing\n")
        assert config.seed == 3

    def test_invalid_key_named_in_error(self):
        with pytest.raises(ConfigError) as err:
            parse_config_text("presett = desk\n")
        assert "presett" in str(err.value)

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("seed = not-a-number\n")

    def test_none_and_bool_values(self):
        config = parse_config_text("preset=desk\nanneal_steps=none\nuse_bow=false\n")
        assert config.anneal_steps is None
        assert config.use_bow is False

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("preset=desk\nmax_epochs=7\n")
        assert load_config(path).max_epochs == 7
