"""
Protection-Header and check-verdict models.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict


class MismatchReason(str, Enum):
    """First failing test of the hardware check, in nesting order."""
    BAD_MAGIC = "bad-magic"
    BELOW_BASE = "below-base"
    ABOVE_BOUND = "above-bound"


class ProtectionHeader(BaseModel):
    """Stored values of the three header words of one object."""

    magic: int
    base_field: int
    bound_field: int

    def is_well_formed(self, magic_addr: int) -> bool:
        return self.magic == magic_addr and self.base_field < self.bound_field


class HeaderAddresses(BaseModel):
    """Addresses of the magic, base and bound words for an object base."""

    model_config = ConfigDict(frozen=True)

    magic_addr: int
    base_addr: int
    bound_addr: int

    def as_tuple(self) -> tuple:
        return (self.magic_addr, self.base_addr, self.bound_addr)

    def contains(self, address: int) -> bool:
        return self.magic_addr <= address <= self.bound_addr


class CheckResult(BaseModel):
    """Verdict of one protection check: allow, or mismatch with a reason."""

    model_config = ConfigDict(frozen=True)

    allowed: bool
    reason: Optional[MismatchReason] = None
    effective_address: int = 0
    checked: bool = True

    @classmethod
    def allow(cls, effective_address: int = 0, checked: bool = True) -> "CheckResult":
        return cls(allowed=True, effective_address=effective_address, checked=checked)

    @classmethod
    def mismatch(cls, reason: MismatchReason, effective_address: int) -> "CheckResult":
        return cls(allowed=False, reason=reason, effective_address=effective_address)

    def __str__(self) -> str:
        return "allow" if self.allowed else f"mismatch({self.reason.value})"
