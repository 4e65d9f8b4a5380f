"""
Instruction encoding, decoding and program image (de)serialization.

Encoding (see docs/isa.md): bits [31:26] hold the opcode.
    R-form  ALU, LOADX, STOREX   [25:21] X  [20:16] ra  [15:11] Y  [10:0] 0
    I-form  ALUI, LOAD, STORE,   [25:21] X  [20:16] Y   [15:0] imm16
            BRANCH, MFSPR, MTSPR
    J-form  JAL                  [25:0] target >> 2
    JALR                         [20:16] ra
    HALT                         opcode only
"""

import logging
import struct
from typing import Dict, List

from pydantic import ValidationError

from models.isa import ALU_OPS, ALUI_OPS, BRANCH_OPS, Instruction, Opcode, ProgramImage
from utils.constants import IMAGE_HEADER_WORDS, IMM16_MAX, IMM16_MIN, WORD_MASK

logger = logging.getLogger(__name__)


class IsaError(Exception):
    """Base instruction-set error."""
    pass


class DecodeError(IsaError):
    """Word does not encode any instruction."""
    pass


class EncodeRangeError(IsaError):
    """Instruction field out of encodable range."""
    pass


class ImageFormatError(IsaError):
    """Malformed binary program image."""
    pass


OPCODE_NUMBERS: Dict[Opcode, int] = {
    Opcode.HALT: 0x01,
    Opcode.ADD: 0x08, Opcode.SUB: 0x09, Opcode.AND: 0x0A,
    Opcode.OR: 0x0B, Opcode.SHL: 0x0C, Opcode.MUL: 0x0D,
    Opcode.ADDI: 0x10, Opcode.SUBI: 0x11, Opcode.ANDI: 0x12,
    Opcode.ORI: 0x13, Opcode.SHLI: 0x14, Opcode.MULI: 0x15,
    Opcode.LOAD: 0x20, Opcode.STORE: 0x21, Opcode.LOADX: 0x22, Opcode.STOREX: 0x23,
    Opcode.MFSPR: 0x28, Opcode.MTSPR: 0x29,
    Opcode.BEQ: 0x30, Opcode.BNE: 0x31, Opcode.BLT: 0x32,
    Opcode.JAL: 0x38, Opcode.JALR: 0x39,
}
# 0x00 and 0x3F (the all-ones word) stay unassigned.
OPCODES_BY_NUMBER: Dict[int, Opcode] = {num: op for op, num in OPCODE_NUMBERS.items()}

R_FORM = set(ALU_OPS) | {Opcode.LOADX, Opcode.STOREX}
I_FORM = set(ALUI_OPS) | set(BRANCH_OPS) | {Opcode.LOAD, Opcode.STORE, Opcode.MFSPR, Opcode.MTSPR}


def sign_extend16(value: int) -> int:
    value &= 0xFFFF
    return value - 0x10000 if value & 0x8000 else value


def effective_address(ra_value: int, imm: int) -> int:
    """
    Register-indirect effective address: rA contents plus sign-extended imm.

    Wraps modulo 2^32; alignment is checked at access time.
    """
    return (ra_value + sign_extend16(imm)) & WORD_MASK


def indexed_address(ra_value: int, rx_value: int) -> int:
    """Effective address of the indexed form: rA contents plus rX contents."""
    return (ra_value + rx_value) & WORD_MASK


def _i_fields(instr: Instruction) -> tuple:
    op = instr.op
    if op in ALUI_OPS or op == Opcode.LOAD:
        return instr.rd, instr.ra
    if op == Opcode.STORE:
        return instr.rb, instr.ra
    if op in BRANCH_OPS:
        return instr.ra, instr.rb
    if op == Opcode.MFSPR:
        return instr.rd, 0
    return instr.rb, 0  # MTSPR: literal value bit


def encode(instr: Instruction) -> int:
    """
    Encode an instruction into its 32-bit word.

    Raises:
        EncodeRangeError: If an immediate does not fit its field
    """
    op = instr.op
    word = OPCODE_NUMBERS[op] << 26
    if op in R_FORM:
        x = instr.rb if op == Opcode.STOREX else instr.rd
        y = instr.rx if op in (Opcode.LOADX, Opcode.STOREX) else instr.rb
        return word | x << 21 | instr.ra << 16 | y << 11
    if op in I_FORM:
        if not IMM16_MIN <= instr.imm <= IMM16_MAX and op not in (Opcode.MFSPR, Opcode.MTSPR):
            raise EncodeRangeError(f"immediate {instr.imm} of {op.value} overflows 16 bits")
        x, y = _i_fields(instr)
        return word | x << 21 | y << 16 | (instr.imm & 0xFFFF)
    if op == Opcode.JAL:
        if instr.imm % 4 or not 0 <= instr.imm >> 2 < (1 << 26):
            raise EncodeRangeError(f"JAL target {instr.imm:#x} not encodable")
        return word | instr.imm >> 2
    if op == Opcode.JALR:
        return word | instr.ra << 16
    return word


def decode(word: int) -> Instruction:
    """
    Decode a 32-bit word into the unique instruction it encodes.

    Raises:
        DecodeError: For unassigned opcodes, nonzero reserved bits or
            unmodeled SPR bits
    """
    word &= WORD_MASK
    op = OPCODES_BY_NUMBER.get(word >> 26)
    if op is None:
        raise DecodeError(f"unassigned opcode {word >> 26:#04x} in word {word:#010x}")
    x = (word >> 21) & 0x1F
    y = (word >> 16) & 0x1F
    try:
        if op in R_FORM:
            if word & 0x7FF:
                raise DecodeError(f"reserved bits set in {op.value} word {word:#010x}")
            z = (word >> 11) & 0x1F
            if op == Opcode.LOADX:
                return Instruction(op=op, rd=x, ra=y, rx=z)
            if op == Opcode.STOREX:
                return Instruction(op=op, rb=x, ra=y, rx=z)
            return Instruction(op=op, rd=x, ra=y, rb=z)
        if op in I_FORM:
            imm = sign_extend16(word)
            if op in ALUI_OPS or op == Opcode.LOAD:
                return Instruction(op=op, rd=x, ra=y, imm=imm)
            if op == Opcode.STORE:
                return Instruction(op=op, rb=x, ra=y, imm=imm)
            if op in BRANCH_OPS:
                return Instruction(op=op, ra=x, rb=y, imm=imm)
            if y:
                raise DecodeError(f"reserved bits set in {op.value} word {word:#010x}")
            if op == Opcode.MFSPR:
                return Instruction(op=op, rd=x, imm=word & 0xFFFF)
            return Instruction(op=op, rb=x, imm=word & 0xFFFF)
        if op == Opcode.JAL:
            return Instruction(op=op, imm=(word & 0x3FFFFFF) << 2)
        if op == Opcode.JALR:
            if word & 0x03E0FFFF:
                raise DecodeError(f"reserved bits set in jalr word {word:#010x}")
            return Instruction(op=op, ra=y)
        if word & 0x03FFFFFF:
            raise DecodeError(f"reserved bits set in halt word {word:#010x}")
        return Instruction(op=op)
    except ValidationError as e:
        raise DecodeError(f"word {word:#010x} is not a valid {op.value}: {e.errors()[0]['msg']}")


def format_instruction(instr: Instruction, target: str = None) -> str:
    """
    Render an instruction in assembly syntax.

    Args:
        instr: Instruction to print
        target: Optional symbolic label replacing a branch/jump target

    Returns:
        One line of assembly text
    """
    op = instr.op
    name = op.value
    if op in ALU_OPS:
        return f"{name} r{instr.rd}, r{instr.ra}, r{instr.rb}"
    if op in ALUI_OPS:
        return f"{name} r{instr.rd}, r{instr.ra}, {instr.imm}"
    if op == Opcode.LOAD:
        return f"{name} r{instr.rd}, {instr.imm}(r{instr.ra})"
    if op == Opcode.STORE:
        return f"{name} {instr.imm}(r{instr.ra}), r{instr.rb}"
    if op == Opcode.LOADX:
        return f"{name} r{instr.rd}, r{instr.ra}, r{instr.rx}"
    if op == Opcode.STOREX:
        return f"{name} r{instr.ra}, r{instr.rx}, r{instr.rb}"
    if op == Opcode.MTSPR:
        return f"{name} {instr.imm}, {instr.rb}"
    if op == Opcode.MFSPR:
        return f"{name} r{instr.rd}, {instr.imm}"
    if op in BRANCH_OPS:
        return f"{name} r{instr.ra}, r{instr.rb}, {target or instr.imm}"
    if op == Opcode.JAL:
        return f"{name} {target or hex(instr.imm)}"
    if op == Opcode.JALR:
        return f"{name} r{instr.ra}"
    return name


def image_to_bytes(image: ProgramImage) -> bytes:
    """Serialize an image: big-endian header (entry, sp, length) then words."""
    header = [image.entry_pc, image.initial_sp, len(image.words)]
    return struct.pack(f">{IMAGE_HEADER_WORDS + len(image.words)}I", *(header + list(image.words)))


def image_from_bytes(data: bytes) -> ProgramImage:
    """
    Parse a binary image.

    Raises:
        ImageFormatError: If the header is truncated or the length is wrong
    """
    if len(data) < IMAGE_HEADER_WORDS * 4 or len(data) % 4:
        raise ImageFormatError(f"image of {len(data)} bytes is not a whole number of words with a header")
    words: List[int] = list(struct.unpack(f">{len(data) // 4}I", data))
    entry_pc, initial_sp, length = words[:IMAGE_HEADER_WORDS]
    body = words[IMAGE_HEADER_WORDS:]
    if length != len(body):
        raise ImageFormatError(f"header declares {length} words but image holds {len(body)}")
    if entry_pc % 4 or initial_sp % 4:
        raise ImageFormatError("entry PC and initial stack pointer must be word aligned")
    logger.debug(f"Loaded image: {length} words, entry {entry_pc:#x}, sp {initial_sp:#x}")
    return ProgramImage(entry_pc=entry_pc, initial_sp=initial_sp, words=body)
