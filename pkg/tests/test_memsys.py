"""
Memory-hierarchy cost model tests: cache, store buffer, header registers
and cycle accounting.
"""

import random
from typing import Dict, List, Tuple

import pytest
from pydantic import ValidationError

from models.memsys import AccessKind, CacheConfig, CostModel
from tools.memsys_tools import MemorySystem, StoreBuffer, DirectMappedCache


def no_buffer(**cache) -> CostModel:
    return CostModel(cache=CacheConfig(**cache), storebuf_capacity=0)


class ReferenceCache:
    """Independent direct-mapped tag store used as an oracle."""

    def __init__(self, total_size: int, line_size: int):
        self.lines = total_size // line_size
        self.line_size = line_size
        self.tags: Dict[int, int] = {}

    def access(self, address: int) -> bool:
        block = address // self.line_size
        index, tag = block % self.lines, block // self.lines
        hit = self.tags.get(index) == tag
        self.tags[index] = tag
        return hit


class TestCache:
    """Direct-mapped L1 lookups."""

    def test_disabled_cache_always_misses(self):
        memsys = MemorySystem(no_buffer(enabled=False))
        assert [memsys.mem_access(AccessKind.DATA_READ, 0x100) for _ in range(3)] == [10, 10, 10]
        assert memsys.stats.cache_misses == 3

    def test_same_line_hits(self):
        memsys = MemorySystem(no_buffer())
        assert memsys.mem_access(AccessKind.DATA_READ, 0x100) == 10
        assert memsys.mem_access(AccessKind.DATA_READ, 0x104) == 1

    def test_conflicting_lines_evict(self):
        memsys = MemorySystem(no_buffer(total_size=256, line_size=32))
        memsys.mem_access(AccessKind.DATA_READ, 0x0)
        memsys.mem_access(AccessKind.DATA_READ, 0x100)
        assert memsys.mem_access(AccessKind.DATA_READ, 0x0) == 10

    def test_matches_reference_cache(self):
        rng = random.Random(99)
        memsys = MemorySystem(no_buffer(total_size=512, line_size=16))
        oracle = ReferenceCache(512, 16)
        for _ in range(5000):
            address = rng.randrange(0, 4096, 4)
            kind = AccessKind.HEADER_READ if rng.random() < 0.3 else AccessKind.DATA_READ
            expected = 1 if oracle.access(address) else 10
            assert memsys.mem_access(kind, address) == expected

    def test_headers_share_the_data_line(self):
        warm = MemorySystem(no_buffer())
        object_base = 0x80012350
        warm.mem_access(AccessKind.DATA_READ, object_base)
        cold = MemorySystem(no_buffer())
        assert warm.charge_header_reads(object_base, 3) < cold.charge_header_reads(object_base, 3)
        assert warm.charge_header_reads(object_base, 3) == 3

    def test_lookup_is_write_allocate_on_fill(self):
        cache = DirectMappedCache(CacheConfig())
        cache.fill(0x2000)
        assert cache.lookup(0x2004)


class TestCacheConfig:
    """Geometry validation."""

    def test_line_size_power_of_two(self):
        with pytest.raises(ValidationError):
            CacheConfig(line_size=24)

    def test_line_size_at_least_a_word(self):
        with pytest.raises(ValidationError):
            CacheConfig(line_size=2, total_size=64)

    def test_total_size_at_least_a_line(self):
        with pytest.raises(ValidationError):
            CacheConfig(line_size=32, total_size=16)

    def test_overrides(self):
        model = CostModel().with_overrides({"cache.size": 8192, "headerregs.enabled": True, "cost.base": 2})
        assert model.cache.total_size == 8192
        assert model.headerregs_enabled
        assert model.base_cost == 2

    def test_unknown_override(self):
        with pytest.raises(ValueError):
            CostModel().with_overrides({"cache.ways": 4})


class TestStoreBuffer:
    """Lazy writes with store-to-load forwarding."""

    def test_stores_complete_without_stall_while_space(self):
        memsys = MemorySystem(CostModel(storebuf_capacity=4))
        stalls = [memsys.mem_access(AccessKind.DATA_WRITE, 0x100 + 4 * i, i) for i in range(4)]
        assert stalls == [0, 0, 0, 0]
        assert memsys.mem_access(AccessKind.DATA_WRITE, 0x200, 9) == 1
        assert memsys.stats.store_stall_cycles == 1

    def test_forwarding_returns_youngest_value(self):
        buffer = StoreBuffer(8, 1, DirectMappedCache(CacheConfig()))
        buffer.push(0x100, 1)
        buffer.push(0x100, 2)
        assert buffer.forward(0x100) == 2
        assert buffer.forward(0x104) is None

    def test_forwarded_load_costs_a_hit(self):
        memsys = MemorySystem(CostModel())
        memsys.mem_access(AccessKind.DATA_WRITE, 0x100, 5)
        assert memsys.mem_access(AccessKind.DATA_READ, 0x100) == 1
        assert memsys.stats.forwarded_loads == 1

    def test_forwarded_load_without_cache_costs_a_miss(self):
        memsys = MemorySystem(CostModel(cache=CacheConfig(enabled=False)))
        memsys.mem_access(AccessKind.DATA_WRITE, 0x100, 5)
        assert memsys.mem_access(AccessKind.DATA_READ, 0x100) == 10
        assert memsys.mem_access(AccessKind.HEADER_READ, 0x100) == 10
        assert memsys.stats.forwarded_loads == 2

    def test_drained_store_allocates_its_line(self):
        memsys = MemorySystem(CostModel())
        memsys.mem_access(AccessKind.DATA_WRITE, 0x100, 5)
        memsys.advance(1)
        assert len(memsys.store_buffer) == 0
        assert memsys.mem_access(AccessKind.DATA_READ, 0x100) == 1
        assert memsys.stats.forwarded_loads == 0

    def test_context_switch_flushes(self):
        memsys = MemorySystem(CostModel())
        for i in range(3):
            memsys.mem_access(AccessKind.DATA_WRITE, 0x100 + 4 * i, i)
        memsys.context_switch()
        assert len(memsys.store_buffer) == 0


class TestHeaderRegisters:
    """Single-entry header cache."""

    def test_repeat_access_reads_nothing(self):
        memsys = MemorySystem(CostModel(headerregs_enabled=True))
        _, first = memsys.header_lookup(0x1000, {})
        _, second = memsys.header_lookup(0x1000, {})
        assert (first, second) == (3, 0)
        assert memsys.stats.header_reg_hits == 1

    def test_alternating_objects_thrash(self):
        memsys = MemorySystem(CostModel(headerregs_enabled=True))
        reads = [memsys.header_lookup(base, {})[1] for base in (0x1000, 0x2000) * 4]
        assert reads == [3] * 8

    def test_disabled_always_reads(self):
        memsys = MemorySystem(CostModel())
        reads = [memsys.header_lookup(0x1000, {})[1] for _ in range(4)]
        assert reads == [3, 3, 3, 3]

    def test_header_store_invalidates(self):
        memsys = MemorySystem(CostModel(headerregs_enabled=True))
        memsys.header_lookup(0x1000, {})
        memsys.mem_access(AccessKind.DATA_WRITE, 0x0FF8, 7)
        assert memsys.header_lookup(0x1000, {})[1] == 3

    def test_data_store_keeps_entry(self):
        memsys = MemorySystem(CostModel(headerregs_enabled=True))
        memsys.header_lookup(0x1000, {})
        memsys.mem_access(AccessKind.DATA_WRITE, 0x1000, 7)
        assert memsys.header_lookup(0x1000, {})[1] == 0

    def test_context_switch_invalidates(self):
        memsys = MemorySystem(CostModel(headerregs_enabled=True))
        memsys.header_lookup(0x1000, {})
        memsys.context_switch()
        assert memsys.header_lookup(0x1000, {})[1] == 3

    def test_lookup_returns_stored_values(self):
        memsys = MemorySystem(CostModel(headerregs_enabled=True))
        mem = {0x0FF4: 0x0FF4, 0x0FF8: 0x0FFF, 0x0FFC: 0x1010}
        header, _ = memsys.header_lookup(0x1000, mem)
        assert (header.magic, header.base_field, header.bound_field) == (0x0FF4, 0x0FFF, 0x1010)


class TestAccounting:
    """total_mem_cycles is the sum of every charged access."""

    def test_random_trace(self):
        rng = random.Random(5)
        memsys = MemorySystem(CostModel(storebuf_capacity=3, cache=CacheConfig(total_size=256)))
        charged: List[Tuple[AccessKind, int]] = []
        total = 0
        for _ in range(3000):
            kind = rng.choice(list(AccessKind))
            address = rng.randrange(0, 2048, 4)
            total += memsys.mem_access(kind, address, rng.getrandbits(32))
            charged.append((kind, address))
            if rng.random() < 0.3:
                memsys.advance(rng.randint(1, 3))
        stats = memsys.stats
        assert stats.total_mem_cycles == total
        assert stats.data_reads + stats.data_writes + stats.header_reads == len(charged)
        assert stats.header_reads == sum(1 for kind, _ in charged if kind == AccessKind.HEADER_READ)

    def test_swap_stats(self):
        memsys = MemorySystem(CostModel())
        memsys.mem_access(AccessKind.DATA_READ, 0x100)
        previous = memsys.swap_stats(memsys.stats.model_copy(update={"data_reads": 0}))
        assert previous.data_reads == 1
        assert memsys.stats.data_reads == 0
