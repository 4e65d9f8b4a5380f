"""
Machine state models: registers, SPR flags, sparse memory and trap records.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from utils.constants import NUM_REGISTERS, WORD_MASK


class SparseMemory(dict):
    """
    Byte-addressed, default-zero data memory.

    Only aligned words are ever stored, keyed by the address of their first
    byte; any address never written reads as zero.
    """

    def read_word(self, address: int) -> int:
        return self.get(address & WORD_MASK, 0)

    def write_word(self, address: int, value: int) -> None:
        self[address & WORD_MASK] = value & WORD_MASK


class SprFlags(BaseModel):
    """The two modeled SPR bits: GEB (bit 17) and PHWE (bit 18)."""

    geb: bool = False
    phwe: bool = False

    @property
    def checking(self) -> bool:
        """GEB set and PHWE clear: loads and stores are checked."""
        return self.geb and not self.phwe


class TrapKind(str, Enum):
    """Reasons a machine stops abnormally."""
    MISMATCH = "mismatch-exception"
    DECODE_ERROR = "decode-error"
    ALIGNMENT_ERROR = "alignment-error"


class TrapRecord(BaseModel):
    """Where and why the machine trapped."""

    kind: TrapKind
    pc: int
    effective_address: int
    detail: str = ""
    reason: Optional[str] = None
    object_base: Optional[int] = None
    header: Dict[str, int] = Field(default_factory=dict, description="Header address -> stored value")


class MachineState(BaseModel):
    """Architectural state of one simulated process."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    regs: List[int] = Field(default_factory=lambda: [0] * NUM_REGISTERS)
    pc: int = 0
    spr: SprFlags = Field(default_factory=SprFlags)
    mem: SparseMemory = Field(default_factory=SparseMemory)
    cycles: int = 0
    instructions: int = 0
    halted: bool = False
    trap: Optional[TrapRecord] = None

    def reg(self, index: int) -> int:
        return 0 if index == 0 else self.regs[index]

    def set_reg(self, index: int, value: int) -> None:
        if index:
            self.regs[index] = value & WORD_MASK

    def snapshot(self) -> Dict[str, object]:
        """Architectural view used by transparency checks (cycles excluded)."""
        return {
            "regs": list(self.regs),
            "pc": self.pc,
            "mem": {addr: val for addr, val in sorted(self.mem.items()) if val},
            "halted": self.halted,
            "trap": self.trap.model_dump() if self.trap else None,
        }
