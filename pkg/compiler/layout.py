"""
Frame layout: where each block and its Protection-Header sit in a stack frame.

Blocks ascend from the stack pointer in this order: pointer parameters,
arrays and local pointers in declaration order, the frame-scalar block
(scalar parameters, scalar locals, then call spill slots) and finally the
system block (return address, saved frame pointer). With GANDALF every
block is preceded by its 12-byte header; the frame-scalar header is left
out when the function has no scalars at all.
"""

import logging
from collections import Counter
from typing import Dict, List, Optional

from compiler.errors import CompileError
from compiler.syntax import DeclKind, Function
from models.frame import BlockKind, FrameBlock, FrameLayout
from utils.constants import HEADER_BYTES, IMM16_MAX, WORD_BYTES

logger = logging.getLogger(__name__)

SYSTEM_BLOCK = "$system"
SCALAR_BLOCK = "$scalars"
RA_SLOT = "ra"
FP_SLOT = "fp"


def spill_slot(index: int) -> str:
    return f"$spill{index}"


def pointer_bytes(gandalf: bool) -> int:
    """(object_base, byte_offset) pair under GANDALF, a bare address otherwise."""
    return 2 * WORD_BYTES if gandalf else WORD_BYTES


def slot_names(fn: Function) -> Dict[int, str]:
    """
    Unique frame name for every parameter and declaration of ``fn``.

    Shadowed names get a ``.N`` suffix in declaration order. Keys are
    ``id()`` of the Param/Decl nodes.
    """
    seen: Counter = Counter()
    names: Dict[int, str] = {}
    for item in [*fn.params, *fn.declarations()]:
        count = seen[item.name]
        seen[item.name] += 1
        names[id(item)] = item.name if count == 0 else f"{item.name}.{count}"
    return names


def layout_frame(fn: Function, gandalf: bool, spill_slots: int = 0) -> FrameLayout:
    """
    Compute the frame layout of one function.

    Args:
        fn: Parsed function
        gandalf: Prepend Protection-Headers to every block
        spill_slots: Hidden words for temporaries live across calls

    Returns:
        FrameLayout with SP-relative offsets

    Raises:
        CompileError: If the frame does not fit 16-bit displacements
    """
    names = slot_names(fn)
    blocks: List[FrameBlock] = []
    offset = 0

    def add(name: str, kind: BlockKind, size: int, slots: Optional[Dict[str, int]] = None, headered: bool = True) -> None:
        nonlocal offset
        header_offset = None
        if gandalf and headered:
            header_offset = offset
            offset += HEADER_BYTES
        blocks.append(FrameBlock(
            name=name,
            kind=kind,
            data_offset=offset,
            size=size,
            header_offset=header_offset,
            slots=slots or {},
        ))
        offset += size

    for param in fn.params:
        if param.is_pointer:
            add(names[id(param)], BlockKind.POINTER_PARAM, pointer_bytes(gandalf))

    scalar_names = [names[id(p)] for p in fn.params if not p.is_pointer]
    for decl in fn.declarations():
        if decl.kind == DeclKind.ARRAY:
            add(names[id(decl)], BlockKind.ARRAY, decl.size * WORD_BYTES)
        elif decl.kind == DeclKind.POINTER:
            add(names[id(decl)], BlockKind.POINTER, pointer_bytes(gandalf))
        else:
            scalar_names.append(names[id(decl)])
    scalar_names.extend(spill_slot(i) for i in range(spill_slots))

    slots = {name: i * WORD_BYTES for i, name in enumerate(scalar_names)}
    add(SCALAR_BLOCK, BlockKind.SCALARS, len(slots) * WORD_BYTES, slots, headered=bool(slots))
    add(SYSTEM_BLOCK, BlockKind.SYSTEM, 2 * WORD_BYTES, {RA_SLOT: 0, FP_SLOT: WORD_BYTES})

    if offset > IMM16_MAX:
        raise CompileError(f"frame of {fn.name} needs {offset} bytes, beyond 16-bit displacements", line=fn.line)

    layout = FrameLayout(
        function=fn.name,
        gandalf=gandalf,
        blocks=blocks,
        frame_size=offset,
        spill_slots=spill_slots,
    )
    logger.debug(f"Frame of {fn.name}: {offset} bytes, {len(layout.headered_blocks)} headers")
    return layout
