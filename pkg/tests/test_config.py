"""Tests for configuration loading, environment helpers and logging utilities."""

import json
import logging

import pytest

from semrelay.cli.io import apply_overrides, parse_modes, read_run_config
from semrelay.core.exceptions import ConfigurationError
from semrelay.core.models import BaselineMode, RunConfig
from semrelay.utils.config import get_config_value, load_config, merge_configs
from semrelay.utils.env_loader import get_default_seed, get_env_var, load_environment_variables
from semrelay.utils.logging import StructuredLogger, log_performance, setup_logging

from .conftest import CONFIG_DIR


class _Collector(logging.Handler):
    """Keeps formatted messages and levels of the records it receives."""

    def __init__(self):
        super().__init__(level=logging.DEBUG)
        self.messages = []
        self.levels = []

    def emit(self, record):
        self.messages.append(record.getMessage())
        self.levels.append(record.levelno)


@pytest.mark.unit
class TestLoadConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError) as exc:
            load_config(tmp_path / "absent.json")
        assert exc.value.config_file.endswith("absent.json")

    def test_unsupported_suffix(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("scenario: {}\n")
        with pytest.raises(ConfigurationError, match="Unsupported"):
            load_config(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text('{\n  "budgets": {\n    "p_r_w": ,\n  }\n}\n')
        with pytest.raises(ConfigurationError, match="line 3"):
            load_config(path)

    def test_root_must_be_object(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigurationError):
            load_config(path)


@pytest.mark.unit
class TestConfigHelpers:
    def test_dotted_access(self):
        config = {"budgets": {"b_r_hz": 1e7}}
        assert get_config_value(config, "budgets.b_r_hz") == 1e7
        assert get_config_value(config, "budgets.p_r_w", 10.0) == 10.0
        assert get_config_value(config, "budgets.b_r_hz.deeper") is None

    def test_merge_is_section_wise(self):
        base = {"budgets": {"b_r_hz": 1e7, "p_r_w": 10.0}, "modes": ["joint", "fixed-b"]}
        override = {"budgets": {"p_r_w": 20.0}, "modes": ["joint"]}
        merged = merge_configs(base, override, None)
        assert merged == {"budgets": {"b_r_hz": 1e7, "p_r_w": 20.0}, "modes": ["joint"]}
        assert base["budgets"]["p_r_w"] == 10.0


@pytest.mark.unit
class TestRunConfig:
    @pytest.mark.parametrize("name", ["tiny", "sweep_br", "sweep_pr", "trajectory", "scenarios"])
    def test_shipped_configs_validate(self, name):
        assert isinstance(read_run_config(CONFIG_DIR / f"{name}.json"), RunConfig)

    def test_extends_merges_over_base(self):
        config = read_run_config(CONFIG_DIR / "sweep_pr.json")
        assert config.sweep.axis == "p_r_w"
        assert config.scenario.clusters == 5
        assert config.output.directory == "results/sweep_pr"
        assert config.output.format == "csv"
        assert len(config.modes) == 4

    def test_extends_cycle_rejected(self, tmp_path):
        (tmp_path / "a.json").write_text(json.dumps({"extends": "b.json"}))
        (tmp_path / "b.json").write_text(json.dumps({"extends": "a.json"}))
        with pytest.raises(ConfigurationError) as exc:
            read_run_config(tmp_path / "a.json")
        assert exc.value.config_key == "extends"

    def test_validation_error_names_field(self, temp_config_file):
        path = temp_config_file({"budgets": {"b_r_hz": 0.0}})
        with pytest.raises(ConfigurationError) as exc:
            read_run_config(path)
        assert exc.value.config_key == "budgets.b_r_hz"
        assert "got 0.0" in str(exc.value)

    def test_unknown_section_rejected(self, temp_config_file):
        with pytest.raises(ConfigurationError) as exc:
            read_run_config(temp_config_file({"plots": {"dpi": 300}}))
        assert exc.value.config_key == "plots"

    def test_overrides_take_precedence(self, temp_config_file, tmp_path):
        config = read_run_config(temp_config_file())
        out = str(tmp_path / "elsewhere")
        updated = apply_overrides(config, seed=9, modes=[BaselineMode.FIXED_POWER], out=out, fmt="json")
        assert updated.scenario.seed == 9 and updated.solver.seed == 9
        assert updated.modes == [BaselineMode.FIXED_POWER]
        assert updated.output.directory == out and updated.output.format == "json"
        assert config.scenario.seed == 0
        assert apply_overrides(config) is config

    def test_parse_modes(self):
        assert parse_modes(None) is None
        assert parse_modes("joint, fixed-l") == [BaselineMode.JOINT, BaselineMode.FIXED_LOCATION]
        with pytest.raises(ConfigurationError):
            parse_modes("joint,best")


@pytest.mark.unit
class TestEnvironment:
    def test_dotenv_does_not_override(self, tmp_path, monkeypatch):
        env = tmp_path / ".env"
        env.write_text("SEMRELAY_SEED=5\nSEMRELAY_LOG_FILE=from-file.log\n")
        monkeypatch.setenv("SEMRELAY_LOG_FILE", "from-shell.log")
        monkeypatch.delenv("SEMRELAY_SEED", raising=False)
        assert load_environment_variables(str(env))
        assert get_env_var("SEMRELAY_LOG_FILE") == "from-shell.log"
        assert get_default_seed() == 5
        monkeypatch.delenv("SEMRELAY_SEED")

    def test_missing_env_file(self, tmp_path):
        assert not load_environment_variables(str(tmp_path / "none.env"))

    def test_default_for_missing_variable(self, monkeypatch):
        monkeypatch.delenv("SEMRELAY_NOT_SET", raising=False)
        assert get_env_var("SEMRELAY_NOT_SET") is None
        assert get_env_var("SEMRELAY_NOT_SET", "fallback") == "fallback"

    def test_bad_seed_ignored(self, monkeypatch):
        monkeypatch.setenv("SEMRELAY_SEED", "abc")
        assert get_default_seed() is None


@pytest.mark.unit
class TestLogging:
    def test_structured_message_carries_context(self):
        log = StructuredLogger("semrelay.tests.context")
        handler = _Collector()
        log.logger.addHandler(handler)
        log.logger.setLevel(logging.INFO)
        log.set_context(axis="b_r_hz")
        try:
            log.info("sweep point", value=5.0)
        finally:
            log.clear_context()
            log.logger.removeHandler(handler)
        assert handler.messages == ["sweep point | axis=b_r_hz | value=5.0"]

    def test_error_messages_carry_fields(self):
        log = StructuredLogger("semrelay.tests.errors")
        handler = _Collector()
        log.logger.addHandler(handler)
        try:
            log.error("solve failed", subproblem="bandwidth")
        finally:
            log.logger.removeHandler(handler)
        assert handler.messages == ["solve failed | subproblem=bandwidth"]
        assert handler.levels == [logging.ERROR]

    def test_log_file_handler(self, tmp_path):
        log_file = tmp_path / "logs" / "run.log"
        setup_logging(level="INFO", log_file=str(log_file))
        logging.getLogger("semrelay.tests").info("written")
        for handler in logging.getLogger("semrelay").handlers:
            handler.flush()
        assert "written" in log_file.read_text()
        setup_logging(level="DEBUG")

    def test_performance_decorator_passes_through(self):
        @log_performance
        def double(x):
            return 2 * x

        assert double(4) == 8
        assert double.__name__ == "double"

        @log_performance
        def fail():
            raise ConfigurationError("boom")

        with pytest.raises(ConfigurationError):
            fail()
