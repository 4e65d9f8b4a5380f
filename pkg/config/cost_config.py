"""
Loader for key = value cost config files.

    # comment
    cache.size = 8192
    cache.enabled = false
    headerregs.enabled = true
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import ValidationError

from models.memsys import OVERRIDE_KEYS, CostModel

logger = logging.getLogger(__name__)

BOOLEAN_KEYS = {"cache.enabled", "headerregs.enabled"}
TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


class ConfigError(Exception):
    """Unreadable or invalid cost configuration."""
    pass


def parse_cost_config(text: str, source: str = "<config>") -> Dict[str, Any]:
    """
    Parse cost config text into typed override values.

    Raises:
        ConfigError: Unknown keys, malformed lines or bad values
    """
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in OVERRIDE_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown cost config key {key!r}")
        if key in BOOLEAN_KEYS:
            word = value.lower()
            if word not in TRUE_WORDS | FALSE_WORDS:
                raise ConfigError(f"{source}:{lineno}: {key} expects a boolean, got {value!r}")
            values[key] = word in TRUE_WORDS
        else:
            try:
                values[key] = int(value, 0)
            except ValueError:
                raise ConfigError(f"{source}:{lineno}: {key} expects an integer, got {value!r}")
    return values


def load_cost_config(path: Path, base: Optional[CostModel] = None) -> CostModel:
    """
    Apply a cost config file on top of ``base`` (defaults when omitted).

    Raises:
        ConfigError: If the file cannot be read or yields an invalid model
    """
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read cost config {path}: {e}")
    overrides = parse_cost_config(text, source=str(path))
    try:
        model = (base or CostModel()).with_overrides(overrides)
    except (ValidationError, ValueError) as e:
        raise ConfigError(f"invalid cost config {path}: {e}")
    model = model.model_copy(update={"name": path.stem})
    logger.info(f"Loaded cost config {path} ({len(overrides)} keys)")
    return model
