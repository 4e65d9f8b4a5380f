"""
Stack frame layout models produced by the compiler.
"""

from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from utils.constants import HEADER_BYTES


class BlockKind(str, Enum):
    """What a frame block holds."""
    POINTER_PARAM = "pointer-param"
    ARRAY = "array"
    POINTER = "pointer"
    SCALARS = "scalars"
    SYSTEM = "system"


class FrameBlock(BaseModel):
    """
    One contiguous data block of a frame.

    Offsets are relative to the stack pointer after frame allocation.
    ``header_offset`` is the offset of the magic word, or None when the
    block carries no Protection-Header.
    """

    name: str
    kind: BlockKind
    data_offset: int
    size: int = Field(..., ge=0, description="Data bytes")
    header_offset: Optional[int] = None
    slots: Dict[str, int] = Field(default_factory=dict, description="Slot name -> offset from data start")

    @property
    def has_header(self) -> bool:
        return self.header_offset is not None

    @property
    def end_offset(self) -> int:
        return self.data_offset + self.size


class FrameLayout(BaseModel):
    """Placement of every block of one function's frame, in ascending address order."""

    function: str
    gandalf: bool
    blocks: List[FrameBlock] = Field(default_factory=list)
    frame_size: int = 0
    spill_slots: int = 0

    def block(self, name: str) -> FrameBlock:
        for block in self.blocks:
            if block.name == name:
                return block
        raise KeyError(name)

    @property
    def scalar_block(self) -> FrameBlock:
        return next(b for b in self.blocks if b.kind == BlockKind.SCALARS)

    @property
    def system_block(self) -> FrameBlock:
        return next(b for b in self.blocks if b.kind == BlockKind.SYSTEM)

    @property
    def headered_blocks(self) -> List[FrameBlock]:
        return [b for b in self.blocks if b.has_header]

    @property
    def header_bytes(self) -> int:
        return HEADER_BYTES * len(self.headered_blocks)

    @property
    def data_bytes(self) -> int:
        return sum(b.size for b in self.blocks)

    def dump(self, stack_pointer: Optional[int] = None) -> Dict[str, object]:
        """
        JSON-ready map of blocks; with ``stack_pointer`` also absolute header addresses.
        """
        blocks = []
        for b in self.blocks:
            entry: Dict[str, object] = {
                "name": b.name,
                "kind": b.kind.value,
                "data_offset": b.data_offset,
                "size": b.size,
                "header_offset": b.header_offset,
            }
            if b.slots:
                entry["slots"] = dict(b.slots)
            if stack_pointer is not None:
                entry["data_start"] = stack_pointer + b.data_offset
                if b.has_header:
                    magic = stack_pointer + b.header_offset
                    entry["header_addresses"] = [magic, magic + 4, magic + 8]
            blocks.append(entry)
        return {
            "function": self.function,
            "gandalf": self.gandalf,
            "frame_size": self.frame_size,
            "header_bytes": self.header_bytes,
            "data_bytes": self.data_bytes,
            "blocks": blocks,
        }
