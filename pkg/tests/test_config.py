"""Unit tests for run configuration loading and validation"""

import json
import logging
import logging.handlers

import pytest

from src.config.run_config import load_run_config, parse_run_config, preset_config, save_run_config
from src.core.exceptions import ConfigurationError
from src.logging_config.logger import LOG_FILE, configure_logging, setup_logger
from tests.conftest import make_config


class TestParseRunConfig:
    """Tests for dict -> RunConfig validation"""

    def test_defaults_are_valid(self):
        """Empty payload gives the default configuration"""
        config = parse_run_config({})
        assert config.training.learning_rate == pytest.approx(9.56e-3)
        assert config.training.momentum == pytest.approx(0.984)
        assert config.training.tau == pytest.approx(0.005)
        assert config.training.snapshot_period == 500
        assert config.aux.kappa_e == 8192.0
        assert config.aux.kappa_b == 7.0
        assert config.aux.beta == pytest.approx(0.01)
        assert config.aux.ceb_weight == pytest.approx(0.01)

    def test_even_mask_size_rejected(self):
        """Mask squares must center on a cell"""
        with pytest.raises(ConfigurationError, match="mask_size"):
            parse_run_config({"env": {"mask_size": 4}})

    def test_checkpoint_interval_must_align_with_publication(self):
        """Checkpoints must fall on publication steps"""
        with pytest.raises(ConfigurationError, match="publish_interval"):
            parse_run_config({"training": {"publish_interval": 50, "checkpoint_interval": 75}})

    def test_train_buffer_smaller_than_batch_rejected(self):
        """The train buffer must hold at least one batch"""
        with pytest.raises(ConfigurationError, match="at least one batch"):
            parse_run_config({"training": {"batch_size": 64, "train_buffer_capacity": 32}})

    def test_elites_must_be_fewer_than_samples(self):
        """CEM keeps fewer elites than it samples"""
        with pytest.raises(ConfigurationError, match="n_elites"):
            parse_run_config({"cem": {"n_samples": 4, "n_elites": 4}})

    def test_action_bounds_must_cover_four_components(self):
        """Action bounds need one entry per action component"""
        with pytest.raises(ConfigurationError, match="4 action components"):
            parse_run_config({"cem": {"action_low": [-1, -1], "action_high": [1, 1]}})

    def test_unknown_skill_rejected(self):
        """Unknown skill names fail validation with their field path"""
        with pytest.raises(ConfigurationError, match="env.families"):
            parse_run_config({"env": {"families": [{"skill": "stack"}]}})

    def test_pi_width_scales_with_factor(self):
        """Representation-head width is base times factor"""
        config = parse_run_config({"network": {"pi_hidden_base": 512, "pi_width_factor": 0.25, "pi_layers": 3}})
        assert config.network.pi_hidden == (128, 128, 128)


class TestConfigFiles:
    """Tests for JSON round trips and presets"""

    def test_save_then_load(self, tmp_path):
        """A saved config loads back equal"""
        config = make_config()
        path = save_run_config(config, tmp_path / "run.json")
        assert load_run_config(path) == config

    def test_missing_file(self, tmp_path):
        """Missing config files raise ConfigurationError"""
        with pytest.raises(ConfigurationError, match="not found"):
            load_run_config(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        """Malformed JSON raises ConfigurationError"""
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigurationError, match="not valid JSON"):
            load_run_config(path)

    def test_root_must_be_object(self, tmp_path):
        """A JSON root that is not an object is rejected"""
        path = tmp_path / "list.json"
        path.write_text(json.dumps([1, 2]), encoding="utf-8")
        with pytest.raises(ConfigurationError, match="JSON object"):
            load_run_config(path)

    @pytest.mark.parametrize("preset", ["smoke", "pick", "suite"])
    def test_presets_validate(self, preset):
        """Every preset builds a valid config"""
        config = preset_config(preset)
        assert config.name == preset

    def test_unknown_preset(self):
        """Unknown preset names are rejected"""
        with pytest.raises(ConfigurationError, match="unknown preset"):
            preset_config("huge")


class TestLogging:
    """Tests for late logging configuration"""

    def test_existing_loggers_get_file_handler(self, tmp_path):
        """Loggers created before configure_logging still write to the log file"""
        logger = setup_logger("src.tests_logging_file")
        configure_logging(log_level="DEBUG", log_dir=str(tmp_path), log_to_file=True)
        try:
            logger.info("file handler line")
            for handler in logger.handlers:
                handler.flush()
            assert logger.level == logging.DEBUG
            assert "file handler line" in (tmp_path / LOG_FILE).read_text(encoding="utf-8")
        finally:
            configure_logging()
            for handler in list(logger.handlers):
                if isinstance(handler, logging.handlers.RotatingFileHandler):
                    logger.removeHandler(handler)
                    handler.close()
