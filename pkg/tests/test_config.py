import pytest

from app.core.config import Config


@pytest.fixture
def fresh_config():
    Config.reload()
    yield Config
    Config.reload()


def test_nested_lookup(fresh_config):
    assert fresh_config.get_float("engine", "p_floor", default=0.0) == 1e-12
    assert fresh_config.get_int("discrete", "n_max", default=0) == 512
    assert fresh_config.get("assumptions", "integer_n_max", "pt") == 50
    assert fresh_config.get("engine", "missing", default="x") == "x"
    assert fresh_config.get("engine", "p_floor", "deeper", default=None) is None


def test_thread_cap_from_environment(monkeypatch):
    monkeypatch.setenv("CUTPOINT_THREADS", "2")
    Config.reload()
    try:
        assert Config.MAX_WORKERS == 2
    finally:
        monkeypatch.delenv("CUTPOINT_THREADS")
        Config.reload()


def test_thread_cap_is_at_least_one(monkeypatch):
    monkeypatch.setenv("CUTPOINT_THREADS", "0")
    Config.reload()
    try:
        assert Config.MAX_WORKERS == 1
    finally:
        monkeypatch.delenv("CUTPOINT_THREADS")
        Config.reload()


def test_output_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("CUTPOINT_OUTPUT_DIR", str(tmp_path / "results"))
    Config.reload()
    try:
        Config.ensure_directories()
        assert Config.OUTPUT_DIR == tmp_path / "results"
        assert Config.OUTPUT_DIR.is_dir()
    finally:
        monkeypatch.delenv("CUTPOINT_OUTPUT_DIR")
        Config.reload()
