"""
Configuration tests: cost config files, environment settings and their
precedence.
"""

import pytest
from pydantic import ValidationError

from config.cost_config import ConfigError, load_cost_config, parse_cost_config
from config.settings import Settings


def settings(**kwargs) -> Settings:
    return Settings(_env_file=None, **kwargs)


class TestCostConfigParsing:
    """key = value files."""

    def test_comments_booleans_and_hex(self):
        text = "# sweep point\ncache.size = 0x2000   # eight KiB\n\nheaderregs.enabled = yes\ncache.enabled = off\ncost.base = 2\n"
        assert parse_cost_config(text) == {
            "cache.size": 8192,
            "headerregs.enabled": True,
            "cache.enabled": False,
            "cost.base": 2,
        }

    @pytest.mark.parametrize(
        "text",
        ["cache.ways = 4", "cache.enabled = maybe", "cache.size = big", "cache.size", "= 4"],
    )
    def test_rejected_lines(self, text):
        with pytest.raises(ConfigError):
            parse_cost_config(text)

    def test_error_names_the_line(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_cost_config("cache.size = 1024\ncache.ways = 2", source="sweep.cfg")
        assert "sweep.cfg:2" in str(excinfo.value)


class TestCostConfigFiles:
    """Loading a file on top of a base model."""

    def test_model_named_after_file(self, tmp_path):
        path = tmp_path / "small_cache.cfg"
        path.write_text("cache.size = 256\nstorebuf.capacity = 2\n")
        model = load_cost_config(path)
        assert model.name == "small_cache"
        assert model.cache.total_size == 256
        assert model.storebuf_capacity == 2
        assert model.cache.line_size == 32

    def test_invalid_geometry(self, tmp_path):
        path = tmp_path / "odd.cfg"
        path.write_text("cache.size = 3000\n")
        with pytest.raises(ConfigError):
            load_cost_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_cost_config(tmp_path / "absent.cfg")


class TestSettings:
    """Environment-driven settings."""

    def test_defaults(self):
        model = settings().cost_model()
        assert model.name == "default"
        assert model.cache.total_size == 4096
        assert model.cache.miss_cycles == 10
        assert model.storebuf_capacity == 8
        assert not model.headerregs_enabled

    def test_environment(self, monkeypatch):
        monkeypatch.setenv("GANDALF_CACHE_SIZE", "8192")
        monkeypatch.setenv("GANDALF_HEADERREGS_ENABLED", "true")
        model = settings().cost_model()
        assert model.cache.total_size == 8192
        assert model.headerregs_enabled

    def test_precedence(self, monkeypatch, tmp_path):
        path = tmp_path / "file.cfg"
        path.write_text("cache.size = 1024\n")
        monkeypatch.setenv("GANDALF_CACHE_SIZE", "8192")
        monkeypatch.setenv("GANDALF_COST_CONFIG", str(path))
        active = settings()
        assert active.cost_model().cache.total_size == 1024
        assert active.cost_model({"cache.size": 512}).cache.total_size == 512

    def test_log_level(self):
        assert settings(log_level="debug").log_level == "DEBUG"
        with pytest.raises(ValidationError):
            settings(log_level="LOUD")

    @pytest.mark.parametrize("field", ["max_instructions", "workers"])
    def test_positive_limits(self, field):
        with pytest.raises(ValidationError):
            settings(**{field: 0})
