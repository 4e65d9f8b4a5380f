"""
Configuration management for the GANDALF toolchain.
"""

from .cost_config import ConfigError, load_cost_config, parse_cost_config
from .settings import get_settings, Settings

__all__ = ["get_settings", "Settings", "ConfigError", "load_cost_config", "parse_cost_config"]
