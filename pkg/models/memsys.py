"""
Memory-hierarchy cost configuration and statistics models.
"""

from enum import Enum
from typing import Any, Dict

from pydantic import BaseModel, Field, validator

from utils.constants import (
    DEFAULT_BASE_COST,
    DEFAULT_CACHE_LINE,
    DEFAULT_CACHE_SIZE,
    DEFAULT_HIT_CYCLES,
    DEFAULT_MISS_CYCLES,
    DEFAULT_STOREBUF_CAPACITY,
    DEFAULT_STOREBUF_DRAIN,
)


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


class AccessKind(str, Enum):
    """Kinds of memory traffic the cost model distinguishes."""
    DATA_READ = "data-read"
    DATA_WRITE = "data-write"
    HEADER_READ = "header-read"


class CacheConfig(BaseModel):
    """Direct-mapped L1 data cache geometry and latencies."""

    line_size: int = Field(DEFAULT_CACHE_LINE, description="Line size in bytes")
    total_size: int = Field(DEFAULT_CACHE_SIZE, description="Cache capacity in bytes")
    hit_cycles: int = Field(DEFAULT_HIT_CYCLES, ge=0)
    miss_cycles: int = Field(DEFAULT_MISS_CYCLES, ge=0)
    enabled: bool = True

    @validator("line_size")
    def validate_line_size(cls, v):
        if not _is_power_of_two(v) or v < 4:
            raise ValueError("line_size must be a power of two and at least 4 bytes")
        return v

    @validator("total_size")
    def validate_total_size(cls, v, values):
        if not _is_power_of_two(v):
            raise ValueError("total_size must be a power of two")
        line = values.get("line_size")
        if line is not None and v < line:
            raise ValueError("total_size must be at least one line")
        return v

    @property
    def num_lines(self) -> int:
        return self.total_size // self.line_size


class CostModel(BaseModel):
    """Every parameter that affects cycle counts; embedded in reports."""

    name: str = "default"
    base_cost: int = Field(DEFAULT_BASE_COST, ge=0, description="Cycles per retired instruction")
    cache: CacheConfig = Field(default_factory=CacheConfig)
    storebuf_capacity: int = Field(DEFAULT_STOREBUF_CAPACITY, ge=0)
    storebuf_drain: int = Field(DEFAULT_STOREBUF_DRAIN, ge=1, description="Entries drained per cycle")
    headerregs_enabled: bool = False

    def with_overrides(self, overrides: Dict[str, Any]) -> "CostModel":
        """
        Return a copy with dotted config keys applied.

        Args:
            overrides: Mapping of cost-config keys (``cache.size`` ...) to values

        Returns:
            New validated CostModel
        """
        data = self.model_dump()
        cache = dict(data["cache"])
        for key, value in overrides.items():
            if key not in OVERRIDE_KEYS:
                raise ValueError(f"unknown cost config key: {key}")
            section, field = OVERRIDE_KEYS[key]
            if section == "cache":
                cache[field] = value
            else:
                data[field] = value
        data["cache"] = cache
        return CostModel.model_validate(data)


OVERRIDE_KEYS = {
    "cache.size": ("cache", "total_size"),
    "cache.line": ("cache", "line_size"),
    "cache.hit": ("cache", "hit_cycles"),
    "cache.miss": ("cache", "miss_cycles"),
    "cache.enabled": ("cache", "enabled"),
    "storebuf.capacity": ("model", "storebuf_capacity"),
    "storebuf.drain": ("model", "storebuf_drain"),
    "headerregs.enabled": ("model", "headerregs_enabled"),
    "cost.base": ("model", "base_cost"),
}


class MemStats(BaseModel):
    """Counters kept by the memory system for one process."""

    data_reads: int = 0
    data_writes: int = 0
    header_reads: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    header_reg_hits: int = 0
    forwarded_loads: int = 0
    store_stall_cycles: int = 0
    checked_accesses: int = 0
    header_address_generations: int = 0
    total_mem_cycles: int = 0

    @property
    def hit_rate(self) -> float:
        lookups = self.cache_hits + self.cache_misses
        return self.cache_hits / lookups if lookups else 0.0
