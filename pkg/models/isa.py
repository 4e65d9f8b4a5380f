"""
Instruction set models: opcodes, decoded instructions and program images.
"""

from enum import Enum
from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field, validator

from utils.constants import (
    CODE_BASE,
    GEB_BIT,
    IMM16_MAX,
    IMM16_MIN,
    INITIAL_SP,
    NUM_REGISTERS,
    PHWE_BIT,
)


class Opcode(str, Enum):
    """Mnemonic of every instruction form the toy ISA knows."""
    HALT = "halt"
    ADD = "add"
    SUB = "sub"
    AND = "and"
    OR = "or"
    SHL = "shl"
    MUL = "mul"
    ADDI = "addi"
    SUBI = "subi"
    ANDI = "andi"
    ORI = "ori"
    SHLI = "shli"
    MULI = "muli"
    LOAD = "lw"
    STORE = "sw"
    LOADX = "lwx"
    STOREX = "swx"
    MFSPR = "mfspr"
    MTSPR = "mtspr"
    BEQ = "beq"
    BNE = "bne"
    BLT = "blt"
    JAL = "jal"
    JALR = "jalr"


ALU_OPS = (Opcode.ADD, Opcode.SUB, Opcode.AND, Opcode.OR, Opcode.SHL, Opcode.MUL)
ALUI_OPS = (Opcode.ADDI, Opcode.SUBI, Opcode.ANDI, Opcode.ORI, Opcode.SHLI, Opcode.MULI)
BRANCH_OPS = (Opcode.BEQ, Opcode.BNE, Opcode.BLT)
LOAD_OPS = (Opcode.LOAD, Opcode.LOADX)
STORE_OPS = (Opcode.STORE, Opcode.STOREX)
MEMORY_OPS = LOAD_OPS + STORE_OPS

ALU_NAMES = {"add": 0, "sub": 1, "and": 2, "or": 3, "shl": 4, "mul": 5}


class Instruction(BaseModel):
    """
    Decoded form of one machine word.

    Field use per form:
        ALU    rd <- ra op rb
        ALUI   rd <- ra op imm
        LOAD   rd <- [ra + imm]
        STORE  [ra + imm] <- rb
        LOADX  rd <- [ra + rx]
        STOREX [ra + rx] <- rb
        MFSPR  rd <- SPR[imm]
        MTSPR  SPR[imm] <- rb              (rb holds the literal bit value 0/1)
        BRANCH if ra cond rb: pc <- pc + 4*imm
        JAL    r9 <- pc + 4; pc <- imm
        JALR   pc <- ra
    """

    model_config = ConfigDict(frozen=True)

    op: Opcode
    rd: int = Field(0, ge=0, lt=NUM_REGISTERS)
    ra: int = Field(0, ge=0, lt=NUM_REGISTERS)
    rb: int = Field(0, ge=0, lt=NUM_REGISTERS)
    rx: int = Field(0, ge=0, lt=NUM_REGISTERS)
    imm: int = 0

    @validator("imm", always=True)
    def validate_imm(cls, v, values):
        """Immediates are signed 16-bit except JAL targets and SPR bit indices."""
        op = values.get("op")
        if op == Opcode.JAL:
            if v < 0 or v % 4 or v >= (1 << 28):
                raise ValueError(f"JAL target {v:#x} must be word aligned and below 2^28")
        elif op in (Opcode.MTSPR, Opcode.MFSPR):
            if v not in (GEB_BIT, PHWE_BIT):
                raise ValueError(f"SPR bit {v} is not modeled (only {GEB_BIT} and {PHWE_BIT})")
        elif not IMM16_MIN <= v <= IMM16_MAX:
            raise ValueError(f"immediate {v} does not fit in 16 signed bits")
        return v

    @validator("rb")
    def validate_spr_value(cls, v, values):
        """MTSPR carries a literal bit, not a register."""
        if values.get("op") == Opcode.MTSPR and v not in (0, 1):
            raise ValueError("MTSPR value must be 0 or 1")
        return v

    # Convenience constructors

    @classmethod
    def alu(cls, name: str, rd: int, ra: int, rb: int) -> "Instruction":
        return cls(op=ALU_OPS[ALU_NAMES[name]], rd=rd, ra=ra, rb=rb)

    @classmethod
    def alui(cls, name: str, rd: int, ra: int, imm: int) -> "Instruction":
        return cls(op=ALUI_OPS[ALU_NAMES[name]], rd=rd, ra=ra, imm=imm)

    @classmethod
    def load(cls, rd: int, ra: int, imm: int) -> "Instruction":
        return cls(op=Opcode.LOAD, rd=rd, ra=ra, imm=imm)

    @classmethod
    def store(cls, ra: int, imm: int, rb: int) -> "Instruction":
        return cls(op=Opcode.STORE, ra=ra, imm=imm, rb=rb)

    @classmethod
    def loadx(cls, rd: int, ra: int, rx: int) -> "Instruction":
        return cls(op=Opcode.LOADX, rd=rd, ra=ra, rx=rx)

    @classmethod
    def storex(cls, ra: int, rx: int, rb: int) -> "Instruction":
        return cls(op=Opcode.STOREX, ra=ra, rx=rx, rb=rb)

    @classmethod
    def mtspr(cls, bit: int, value: int) -> "Instruction":
        return cls(op=Opcode.MTSPR, imm=bit, rb=value)

    @classmethod
    def mfspr(cls, rd: int, bit: int) -> "Instruction":
        return cls(op=Opcode.MFSPR, rd=rd, imm=bit)

    @classmethod
    def branch(cls, cond: str, ra: int, rb: int, offset: int) -> "Instruction":
        return cls(op=Opcode(cond), ra=ra, rb=rb, imm=offset)

    @classmethod
    def jal(cls, target: int) -> "Instruction":
        return cls(op=Opcode.JAL, imm=target)

    @classmethod
    def jalr(cls, ra: int) -> "Instruction":
        return cls(op=Opcode.JALR, ra=ra)

    @classmethod
    def halt(cls) -> "Instruction":
        return cls(op=Opcode.HALT)

    @property
    def is_memory(self) -> bool:
        return self.op in MEMORY_OPS

    @property
    def is_store(self) -> bool:
        return self.op in STORE_OPS


class ProgramImage(BaseModel):
    """
    Loadable program: entry PC, initial stack pointer and code words.

    The binary form is a 3-word big-endian header (entry, sp, length)
    followed by the code words; ``symbols`` is kept in memory only.
    """

    entry_pc: int = CODE_BASE
    initial_sp: int = INITIAL_SP
    words: List[int] = Field(default_factory=list)
    load_base: int = CODE_BASE
    symbols: Dict[str, int] = Field(default_factory=dict)

    @property
    def length(self) -> int:
        return len(self.words)

    def function_at(self, pc: int) -> str:
        """Name of the symbol whose code range contains ``pc`` (nearest label below)."""
        best_name, best_addr = "", -1
        for name, addr in self.symbols.items():
            if best_addr < addr <= pc and not name.startswith("."):
                best_name, best_addr = name, addr
        return best_name
