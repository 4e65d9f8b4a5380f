"""
Configuration management using Pydantic Settings.
"""

import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import Field, validator
from pydantic_settings import BaseSettings

from config.cost_config import load_cost_config
from models.memsys import CacheConfig, CostModel
from utils.constants import (
    DEFAULT_BASE_COST,
    DEFAULT_CACHE_LINE,
    DEFAULT_CACHE_SIZE,
    DEFAULT_HIT_CYCLES,
    DEFAULT_MAX_INSTRUCTIONS,
    DEFAULT_MISS_CYCLES,
    DEFAULT_STOREBUF_CAPACITY,
    DEFAULT_STOREBUF_DRAIN,
    TIGHT_LOOP_ENTRY,
)


class Settings(BaseSettings):
    """Simulator and harness settings with validation."""

    # Logging Configuration
    log_level: str = Field("INFO", description="Logging level")
    log_file: Optional[str] = Field(None, description="Optional log file path")

    # Simulation limits
    max_instructions: int = Field(DEFAULT_MAX_INSTRUCTIONS, description="Instruction limit per run")

    # Harness
    corpus_dir: str = Field("data/corpus", description="Directory of *.mg sources and *.expect manifests")
    report_dir: str = Field("reports", description="Where corpus and bench reports are written")
    tight_loop_entry: str = Field(TIGHT_LOOP_ENTRY, description="Corpus entry used for the header-register benefit")
    workers: int = Field(4, description="Corpus entries simulated concurrently")

    # Cost model defaults (overridden by the cost config file, then by CLI flags)
    cost_config: Optional[str] = Field(None, description="Path of a key = value cost config file")
    cache_size: int = Field(DEFAULT_CACHE_SIZE, description="L1 capacity in bytes")
    cache_line: int = Field(DEFAULT_CACHE_LINE, description="L1 line size in bytes")
    cache_hit: int = Field(DEFAULT_HIT_CYCLES, description="Cycles per cache hit")
    cache_miss: int = Field(DEFAULT_MISS_CYCLES, description="Cycles per cache miss")
    cache_enabled: bool = Field(True, description="Model the L1 cache")
    storebuf_capacity: int = Field(DEFAULT_STOREBUF_CAPACITY, description="Store buffer entries")
    storebuf_drain: int = Field(DEFAULT_STOREBUF_DRAIN, description="Store buffer entries drained per cycle")
    headerregs_enabled: bool = Field(False, description="Model the on-chip header registers")
    base_cost: int = Field(DEFAULT_BASE_COST, description="Cycles per retired instruction")

    class Config:
        env_prefix = "GANDALF_"
        env_file = ".env"
        env_file_encoding = "utf-8"
        case_sensitive = False
        extra = "ignore"

    @validator('log_level')
    def validate_log_level(cls, v):
        """Validate log level."""
        valid_levels = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']
        if v.upper() not in valid_levels:
            raise ValueError(f'log_level must be one of: {valid_levels}')
        return v.upper()

    @validator('max_instructions', 'workers')
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError('must be at least 1')
        return v

    def cost_model(self, overrides: Optional[Dict[str, Any]] = None) -> CostModel:
        """
        Build the active cost model.

        Settings supply the defaults, the cost config file (when set)
        overrides them, and ``overrides`` (CLI flags) win over both.

        Raises:
            ConfigError: If the cost config file is unreadable or invalid
        """
        model = CostModel(
            base_cost=self.base_cost,
            cache=CacheConfig(
                total_size=self.cache_size,
                line_size=self.cache_line,
                hit_cycles=self.cache_hit,
                miss_cycles=self.cache_miss,
                enabled=self.cache_enabled,
            ),
            storebuf_capacity=self.storebuf_capacity,
            storebuf_drain=self.storebuf_drain,
            headerregs_enabled=self.headerregs_enabled,
        )
        if self.cost_config:
            model = load_cost_config(Path(self.cost_config), base=model)
        if overrides:
            model = model.with_overrides(overrides)
        return model

    def setup_logging(self, console_level: Optional[str] = None) -> None:
        """Setup logging configuration."""
        handlers = [logging.StreamHandler()]
        if self.log_file:
            log_path = Path(self.log_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)
            handlers.append(logging.FileHandler(self.log_file, encoding='utf-8'))

        logging.basicConfig(
            level=getattr(logging, console_level or self.log_level),
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=handlers,
        )

        # PLY reports grammar construction at INFO
        logging.getLogger("ply").setLevel(logging.WARNING)


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
