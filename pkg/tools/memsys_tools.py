"""
Cycle-cost model of the memory hierarchy.

Architectural memory lives in MachineState and is updated immediately by the
simulator; the classes here only decide how many cycles each access costs.
"""

import logging
from collections import deque
from typing import Deque, Mapping, Optional, Tuple

from models.guard import ProtectionHeader
from models.memsys import AccessKind, CacheConfig, CostModel, MemStats
from tools.guard_tools import derive_header_addresses

logger = logging.getLogger(__name__)


class DirectMappedCache:
    """Direct-mapped L1 data cache holding tags only."""

    def __init__(self, config: CacheConfig):
        self.config = config
        self.tags = [None] * config.num_lines

    def _index_tag(self, address: int) -> Tuple[int, int]:
        line = address // self.config.line_size
        return line % self.config.num_lines, line // self.config.num_lines

    def lookup(self, address: int) -> bool:
        """Probe and fill; True on hit. A disabled cache always misses."""
        if not self.config.enabled:
            return False
        index, tag = self._index_tag(address)
        if self.tags[index] == tag:
            return True
        self.tags[index] = tag
        return False

    def fill(self, address: int) -> None:
        if self.config.enabled:
            index, tag = self._index_tag(address)
            self.tags[index] = tag

    def reset(self) -> None:
        self.tags = [None] * self.config.num_lines


class StoreBuffer:
    """Bounded FIFO of pending (address, value) stores drained lazily into the cache."""

    def __init__(self, capacity: int, drain_rate: int, cache: DirectMappedCache):
        self.capacity = capacity
        self.drain_rate = drain_rate
        self.cache = cache
        self.pending: Deque[Tuple[int, int]] = deque()

    def __len__(self) -> int:
        return len(self.pending)

    @property
    def is_full(self) -> bool:
        return len(self.pending) >= self.capacity

    def push(self, address: int, value: int) -> int:
        """
        Enqueue a store.

        Returns:
            Stall cycles: 0 while there is space, 1 when the store had to
            wait for a drain slot
        """
        stall = 0
        if self.is_full:
            stall = 1
            self.drain(self.drain_rate)
        self.pending.append((address, value))
        return stall

    def forward(self, address: int) -> Optional[int]:
        """Youngest buffered value for ``address``, if any."""
        for pending_addr, value in reversed(self.pending):
            if pending_addr == address:
                return value
        return None

    def drain(self, entries: int) -> int:
        """Retire up to ``entries`` stores into the cache (write-allocate)."""
        drained = 0
        while self.pending and drained < entries:
            address, _ = self.pending.popleft()
            self.cache.fill(address)
            drained += 1
        return drained

    def flush(self) -> int:
        return self.drain(len(self.pending))


class HeaderRegs:
    """Single-entry on-chip copy of the last checked object's header."""

    def __init__(self, enabled: bool = False):
        self.enabled = enabled
        self.cached_object_base: Optional[int] = None
        self.header: Optional[ProtectionHeader] = None

    def matches(self, object_base: int) -> bool:
        return self.enabled and self.cached_object_base == object_base

    def refill(self, object_base: int, header: ProtectionHeader) -> None:
        self.cached_object_base = object_base
        self.header = header

    def invalidate(self) -> None:
        self.cached_object_base = None
        self.header = None

    def observe_store(self, address: int) -> None:
        """Drop the entry if a store lands in its header words."""
        if self.cached_object_base is None:
            return
        if self.cached_object_base - 12 <= address <= self.cached_object_base - 4:
            self.invalidate()


class MemorySystem:
    """Cache, store buffer and header registers behind one cost interface."""

    def __init__(self, cost_model: Optional[CostModel] = None):
        self.cost_model = cost_model or CostModel()
        self.cache = DirectMappedCache(self.cost_model.cache)
        self.store_buffer = StoreBuffer(
            self.cost_model.storebuf_capacity, self.cost_model.storebuf_drain, self.cache
        )
        self.header_regs = HeaderRegs(self.cost_model.headerregs_enabled)
        self.stats = MemStats()

    def _cache_cycles(self, address: int) -> int:
        cfg = self.cost_model.cache
        if self.cache.lookup(address):
            self.stats.cache_hits += 1
            return cfg.hit_cycles
        self.stats.cache_misses += 1
        return cfg.miss_cycles

    def mem_access(self, kind: AccessKind, address: int, value: int = 0) -> int:
        """
        Charge one memory access.

        Loads (data or header) are forwarded from the store buffer at hit
        cost when a pending store matches, otherwise looked up in the cache.
        With the cache disabled every load costs a flat miss, forwarded or not.
        Writes enqueue into the store buffer, or go straight to the cache
        when the buffer has no capacity.

        Args:
            kind: Data read, data write or header read
            address: Aligned byte address
            value: Stored value (writes only)

        Returns:
            Cycles charged for this access
        """
        if kind == AccessKind.DATA_WRITE:
            self.stats.data_writes += 1
            self.header_regs.observe_store(address)
            if self.store_buffer.capacity > 0:
                cycles = self.store_buffer.push(address, value)
            else:
                cycles = self._cache_cycles(address)
            self.stats.store_stall_cycles += cycles
        else:
            if kind == AccessKind.HEADER_READ:
                self.stats.header_reads += 1
            else:
                self.stats.data_reads += 1
            if self.store_buffer.forward(address) is not None:
                self.stats.forwarded_loads += 1
                cfg = self.cost_model.cache
                cycles = cfg.hit_cycles if cfg.enabled else cfg.miss_cycles
            else:
                cycles = self._cache_cycles(address)
        self.stats.total_mem_cycles += cycles
        return cycles

    def charge_header_reads(self, object_base: int, count: int) -> int:
        """Issue the first ``count`` header reads (magic, base, bound order)."""
        cycles = 0
        for address in derive_header_addresses(object_base).as_tuple()[:count]:
            cycles += self.mem_access(AccessKind.HEADER_READ, address)
        return cycles

    def header_lookup(self, object_base: int, mem: Mapping[int, int]) -> Tuple[ProtectionHeader, int]:
        """
        Fetch an object's header through the header registers.

        Returns:
            (header values, reads issued): 0 reads on a register hit,
            3 reads otherwise (refilling the registers when enabled)
        """
        if self.header_regs.matches(object_base):
            self.stats.header_reg_hits += 1
            return self.header_regs.header, 0
        addrs = derive_header_addresses(object_base)
        self.charge_header_reads(object_base, 3)
        header = ProtectionHeader(
            magic=mem.get(addrs.magic_addr, 0),
            base_field=mem.get(addrs.base_addr, 0),
            bound_field=mem.get(addrs.bound_addr, 0),
        )
        if self.header_regs.enabled:
            self.header_regs.refill(object_base, header)
        return header, 3

    def advance(self, cycles: int) -> None:
        """Let the store buffer drain for ``cycles`` cycles."""
        if cycles > 0 and len(self.store_buffer):
            self.store_buffer.drain(cycles * self.store_buffer.drain_rate)

    def context_switch(self) -> None:
        """Drain pending stores and forget the cached header on a process switch."""
        self.store_buffer.flush()
        self.header_regs.invalidate()

    def swap_stats(self, stats: MemStats) -> MemStats:
        """Install another process's counters and return the current ones."""
        previous, self.stats = self.stats, stats
        return previous
