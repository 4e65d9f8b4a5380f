"""
Instruction encoding, decoding, addressing and image format tests.
"""

import random

import pytest
from pydantic import ValidationError

from models.isa import ALU_NAMES, Instruction, Opcode, ProgramImage
from tools.isa_tools import (
    DecodeError,
    EncodeRangeError,
    ImageFormatError,
    decode,
    effective_address,
    encode,
    format_instruction,
    image_from_bytes,
    image_to_bytes,
    indexed_address,
    sign_extend16,
)
from utils.constants import GEB_BIT, INITIAL_SP, PHWE_BIT


def random_instruction(rng: random.Random) -> Instruction:
    """One well-formed instruction of a random form."""
    reg = lambda: rng.randrange(32)  # noqa: E731
    imm = rng.randint(-0x8000, 0x7FFF)
    form = rng.randrange(12)
    if form == 0:
        return Instruction.alu(rng.choice(list(ALU_NAMES)), reg(), reg(), reg())
    if form == 1:
        return Instruction.alui(rng.choice(list(ALU_NAMES)), reg(), reg(), imm)
    if form == 2:
        return Instruction.load(reg(), reg(), imm)
    if form == 3:
        return Instruction.store(reg(), imm, reg())
    if form == 4:
        return Instruction.loadx(reg(), reg(), reg())
    if form == 5:
        return Instruction.storex(reg(), reg(), reg())
    if form == 6:
        return Instruction.mtspr(rng.choice((GEB_BIT, PHWE_BIT)), rng.randint(0, 1))
    if form == 7:
        return Instruction.mfspr(reg(), rng.choice((GEB_BIT, PHWE_BIT)))
    if form == 8:
        return Instruction.branch(rng.choice(("beq", "bne", "blt")), reg(), reg(), imm)
    if form == 9:
        return Instruction.jal(rng.randrange(0, 1 << 26) * 4)
    if form == 10:
        return Instruction.jalr(reg())
    return Instruction.halt()


class TestRoundTrip:
    """decode(encode(i)) == i."""

    def test_every_opcode_at_boundary_immediates(self):
        for name in ALU_NAMES:
            for imm in (-0x8000, -1, 0, 1, 0x7FFF):
                instr = Instruction.alui(name, 31, 1, imm)
                assert decode(encode(instr)) == instr
            instr = Instruction.alu(name, 3, 4, 31)
            assert decode(encode(instr)) == instr

    def test_random_instructions(self):
        rng = random.Random(1234)
        for _ in range(20000):
            instr = random_instruction(rng)
            assert decode(encode(instr)) == instr

    def test_load_with_negative_displacement(self):
        instr = Instruction.load(3, 2, -16)
        assert decode(encode(instr)) == instr

    def test_halt_word(self):
        assert encode(Instruction.halt()) == 0x04000000
        assert decode(0x04000000) == Instruction.halt()

    def test_negative_immediate_is_sign_extended(self):
        word = encode(Instruction.alui("add", 1, 1, -12))
        assert word & 0xFFFF == 0xFFF4
        assert decode(word).imm == -12


class TestDecodeErrors:
    """Words that encode nothing."""

    def test_all_ones_word(self):
        with pytest.raises(DecodeError):
            decode(0xFFFFFFFF)

    def test_zero_word(self):
        with pytest.raises(DecodeError):
            decode(0x00000000)

    def test_reserved_bits_in_r_form(self):
        word = encode(Instruction.alu("add", 1, 2, 3))
        with pytest.raises(DecodeError):
            decode(word | 1)

    def test_reserved_bits_in_halt(self):
        with pytest.raises(DecodeError):
            decode(0x04000001)

    def test_unmodeled_spr_bit(self):
        word = (0x29 << 26) | (1 << 21) | 5
        with pytest.raises(DecodeError):
            decode(word)

    def test_mtspr_value_must_be_a_bit(self):
        word = (0x29 << 26) | (2 << 21) | GEB_BIT
        with pytest.raises(DecodeError):
            decode(word)


class TestEncodeErrors:
    """Out-of-range fields."""

    def test_immediate_overflow_rejected_by_model(self):
        with pytest.raises(ValidationError):
            Instruction.alui("add", 1, 1, 70000)

    def test_immediate_overflow_rejected_by_encoder(self):
        instr = Instruction.model_construct(op=Opcode.ADDI, rd=1, ra=1, rb=0, rx=0, imm=70000)
        with pytest.raises(EncodeRangeError):
            encode(instr)

    def test_unaligned_jal_target(self):
        with pytest.raises(ValidationError):
            Instruction.jal(0x1002)

    def test_spr_bit_outside_model(self):
        with pytest.raises(ValidationError):
            Instruction.mtspr(5, 1)

    @pytest.mark.parametrize("op", [Opcode.MTSPR, Opcode.MFSPR])
    def test_spr_bit_left_at_default(self, op):
        with pytest.raises(ValidationError):
            Instruction(op=op, rb=1)

    def test_default_immediate_is_valid_elsewhere(self):
        for op in (Opcode.HALT, Opcode.ADDI, Opcode.JAL, Opcode.LOAD):
            assert Instruction(op=op).imm == 0


class TestAddressing:
    """Register-indirect effective addresses."""

    def test_zero_offset(self):
        assert effective_address(0x80012350, 0) == 0x80012350

    def test_positive_offset(self):
        assert effective_address(0x80012350, 8) == 0x80012358

    def test_negative_offset(self):
        assert effective_address(0x80012350, -4) == 0x8001234C

    def test_wraps_modulo_2_32(self):
        assert effective_address(0xFFFFFFFC, 8) == 0x00000004
        assert indexed_address(0xFFFFFFF0, 0x20) == 0x10

    def test_sign_extend(self):
        assert sign_extend16(0xFFFF) == -1
        assert sign_extend16(0x7FFF) == 0x7FFF


class TestFormatting:
    """Assembly rendering of decoded instructions."""

    def test_memory_forms(self):
        assert format_instruction(Instruction.load(3, 2, -16)) == "lw r3, -16(r2)"
        assert format_instruction(Instruction.store(29, 4, 9)) == "sw 4(r29), r9"
        assert format_instruction(Instruction.loadx(12, 12, 13)) == "lwx r12, r12, r13"
        assert format_instruction(Instruction.storex(12, 13, 14)) == "swx r12, r13, r14"

    def test_symbolic_target(self):
        instr = Instruction.branch("beq", 0, 0, 0)
        assert format_instruction(instr, ".main.L1") == "beq r0, r0, .main.L1"
        assert format_instruction(Instruction.jal(0x1008)) == "jal 0x1008"


class TestImageFormat:
    """Binary program images."""

    def test_image_bytes_layout(self):
        image = ProgramImage(words=[encode(Instruction.halt())])
        data = image_to_bytes(image)
        assert len(data) == 16
        assert data[:4] == bytes.fromhex("00001000")
        assert data[4:8] == INITIAL_SP.to_bytes(4, "big")
        assert data[8:12] == bytes.fromhex("00000001")
        parsed = image_from_bytes(data)
        assert parsed.words == image.words
        assert parsed.entry_pc == image.entry_pc

    def test_truncated_header(self):
        with pytest.raises(ImageFormatError):
            image_from_bytes(b"\x00" * 8)

    def test_length_mismatch(self):
        data = image_to_bytes(ProgramImage(words=[0x04000000]))
        with pytest.raises(ImageFormatError):
            image_from_bytes(data + b"\x04\x00\x00\x00")

    def test_function_lookup_skips_local_labels(self):
        image = ProgramImage(symbols={"_start": 0x1000, "main": 0x100C, ".main.L1": 0x1020})
        assert image.function_at(0x1024) == "main"
        assert image.function_at(0x1004) == "_start"
