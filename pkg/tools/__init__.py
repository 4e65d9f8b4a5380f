"""
Pure operation modules: ISA codec, protection check, memory system.
"""

from .isa_tools import decode, encode, format_instruction, image_from_bytes, image_to_bytes
from .guard_tools import check_access, derive_header_addresses
from .memsys_tools import MemorySystem

__all__ = [
    "decode",
    "encode",
    "format_instruction",
    "image_from_bytes",
    "image_to_bytes",
    "check_access",
    "derive_header_addresses",
    "MemorySystem",
]
