"""
The protection-check unit: header address derivation and the hardware check.
"""

import logging
from typing import Mapping

from models.guard import CheckResult, HeaderAddresses, MismatchReason, ProtectionHeader
from models.machine import SprFlags
from utils.constants import BASE_OFFSET, BOUND_OFFSET, MAGIC_OFFSET, WORD_MASK

logger = logging.getLogger(__name__)


class GuardError(Exception):
    """Base protection-unit error."""
    pass


class HeaderAlignmentError(GuardError):
    """Object base is not word aligned, so no header can be derived."""
    pass


def derive_header_addresses(object_base: int) -> HeaderAddresses:
    """
    Addresses of the magic, base and bound words prepended to an object.

    Args:
        object_base: Address of the object's first data word

    Returns:
        (object_base - 12, object_base - 8, object_base - 4), modulo 2^32

    Raises:
        HeaderAlignmentError: If ``object_base`` is not 4-byte aligned
    """
    if object_base & 3:
        raise HeaderAlignmentError(f"object base {object_base:#010x} is not word aligned")
    return HeaderAddresses(
        magic_addr=(object_base + MAGIC_OFFSET) & WORD_MASK,
        base_addr=(object_base + BASE_OFFSET) & WORD_MASK,
        bound_addr=(object_base + BOUND_OFFSET) & WORD_MASK,
    )


def check_access(
    mem: Mapping[int, int],
    spr: SprFlags,
    object_base: int,
    effective_address: int,
) -> CheckResult:
    """
    Hardware protection check for one load or store.

    With GEB clear, or GEB and PHWE both set, the access is allowed without
    looking at memory. Otherwise the access is allowed iff
    [magic] == magic address, stored base < EA and stored bound > EA,
    evaluated in that order with strict comparisons.

    Args:
        mem: Memory view; unmapped words read as zero
        spr: Live SPR flags
        object_base: Base register value of the access
        effective_address: Address being accessed

    Returns:
        CheckResult (failures are verdicts, never exceptions)
    """
    if not spr.geb or spr.phwe:
        return CheckResult.allow(effective_address, checked=False)
    addrs = derive_header_addresses(object_base)
    if mem.get(addrs.magic_addr, 0) != addrs.magic_addr:
        return CheckResult.mismatch(MismatchReason.BAD_MAGIC, effective_address)
    if not mem.get(addrs.base_addr, 0) < effective_address:
        return CheckResult.mismatch(MismatchReason.BELOW_BASE, effective_address)
    if not mem.get(addrs.bound_addr, 0) > effective_address:
        return CheckResult.mismatch(MismatchReason.ABOVE_BOUND, effective_address)
    return CheckResult.allow(effective_address)


def header_read_count(result: CheckResult) -> int:
    """
    Header words the check had to fetch, given the lazy nested evaluation.

    1 when the magic test failed, 2 when the base test failed, 3 otherwise;
    0 for accesses that bypassed the check.
    """
    if not result.checked:
        return 0
    if result.reason == MismatchReason.BAD_MAGIC:
        return 1
    if result.reason == MismatchReason.BELOW_BASE:
        return 2
    return 3


def read_header(mem: Mapping[int, int], object_base: int) -> ProtectionHeader:
    """Stored header values of an object (for diagnostics and sweeps)."""
    addrs = derive_header_addresses(object_base)
    return ProtectionHeader(
        magic=mem.get(addrs.magic_addr, 0),
        base_field=mem.get(addrs.base_addr, 0),
        bound_field=mem.get(addrs.bound_addr, 0),
    )


def header_fields_for(data_start: int, size: int) -> ProtectionHeader:
    """
    Header values the compiler stores for a block.

    base_field is the greatest illegal low address and bound_field the
    lowest illegal high address, so the strict comparisons admit exactly
    the block's words.
    """
    return ProtectionHeader(
        magic=(data_start + MAGIC_OFFSET) & WORD_MASK,
        base_field=(data_start - 1) & WORD_MASK,
        bound_field=(data_start + size) & WORD_MASK,
    )
