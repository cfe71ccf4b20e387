"""
Configuration and logging tests.

Tests:
- Source precedence (overrides > TOML > environment > defaults)
- Validation errors surface as ConfigError
- Structured JSON log lines
"""

import json
import logging

import pytest

from dynacq.config import ExperimentConfig, get_settings, load_config
from dynacq.core.errors import ConfigError, MissingFile, NoCandidates
from dynacq.logging_config import JSONFormatter, log_error, setup_logging


@pytest.fixture(autouse=True)
def isolated_cwd(tmp_path, monkeypatch):
    """Run every test away from any .env in the working tree."""
    monkeypatch.chdir(tmp_path)
    yield tmp_path


@pytest.fixture
def toml_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('seed = 5\nengine = "class_conditional(3)"\nbudget = 2\n', encoding="utf-8")
    return path


# ========================================
# Precedence
# ========================================

def test_defaults():
    """Reference hyperparameters are the defaults"""
    cfg = load_config()
    assert cfg.n_samples == 10
    assert cfg.alpha == 10.0
    assert cfg.tau == 0.9
    assert cfg.split_ratios == (0.8, 0.1, 0.1)
    assert cfg.engine_choice.kind == "gaussian"


def test_environment(monkeypatch):
    """DYNACQ_* variables are read"""
    monkeypatch.setenv("DYNACQ_SEED", "3")
    assert load_config().seed == 3


def test_toml_beats_environment(monkeypatch, toml_file):
    monkeypatch.setenv("DYNACQ_SEED", "3")
    cfg = load_config(toml_file)
    assert cfg.seed == 5
    assert cfg.engine_choice.components == 3
    assert cfg.budget == 2


def test_overrides_beat_toml(toml_file):
    cfg = load_config(toml_file, seed=7, budget=None)
    assert cfg.seed == 7
    assert cfg.budget == 2


def test_dotenv(isolated_cwd):
    (isolated_cwd / ".env").write_text("DYNACQ_WORKERS=4\n", encoding="utf-8")
    assert load_config().workers == 4


# ========================================
# Validation
# ========================================

def test_missing_toml(tmp_path):
    with pytest.raises(MissingFile):
        load_config(tmp_path / "absent.toml")


def test_malformed_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("seed = = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


@pytest.mark.parametrize("field, value", [
    ("engine", "forest(3)"),
    ("confidence", 1.5),
    ("n_samples", 0),
    ("alpha", -1.0),
    ("calibration_bins", 1),
    ("log_level", "LOUD"),
    ("policy", "random"),
])
def test_invalid_values(field, value):
    """Every bad value becomes a ConfigError naming the field"""
    with pytest.raises(ConfigError) as info:
        load_config(**{field: value})
    assert field in info.value.detail


def test_log_level_normalized():
    assert load_config(log_level="debug").log_level == "DEBUG"


def test_config_is_a_settings_model():
    assert isinstance(load_config(), ExperimentConfig)


def test_get_settings_is_cached():
    """Library callers share one default configuration"""
    get_settings.cache_clear()
    try:
        assert get_settings() is get_settings()
        assert get_settings().seed == 0
    finally:
        get_settings.cache_clear()


# ========================================
# Logging
# ========================================

def test_json_formatter_copies_context():
    """Structured fields land in the JSON object"""
    record = logging.LogRecord("dynacq.test", logging.INFO, __file__, 1, "step done", None, None)
    record.instance = 4
    record.step = 2
    data = json.loads(JSONFormatter().format(record))
    assert data["message"] == "step done"
    assert data["level"] == "INFO"
    assert (data["instance"], data["step"]) == (4, 2)
    assert data["timestamp"].endswith("Z")


def test_log_file_receives_error_codes(tmp_path):
    """log_error records the error and exit codes"""
    log_path = tmp_path / "logs" / "run.jsonl"
    setup_logging("WARNING", str(log_path))
    try:
        log_error(logging.getLogger("dynacq.test"), NoCandidates("nothing left"), {"instance": 9})
        for handler in logging.getLogger().handlers:
            handler.flush()
        lines = [json.loads(line) for line in log_path.read_text(encoding="utf-8").splitlines()]
    finally:
        for handler in logging.getLogger().handlers:
            handler.close()
        logging.getLogger().handlers.clear()
    error = [entry for entry in lines if entry["level"] == "ERROR"][0]
    assert error["error_code"] == "no_candidates"
    assert error["exit_code"] == 1
    assert error["instance"] == 9
