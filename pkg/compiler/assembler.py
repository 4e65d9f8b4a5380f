"""
Two-pass assembler plus the textual assembly format (see docs/assembly.md).
"""

import logging
import re
from typing import Dict, List, Optional

from pydantic import ValidationError

from compiler.errors import AssemblerError
from models.asm import AsmLine, AsmProgram
from models.isa import ALU_OPS, ALUI_OPS, BRANCH_OPS, Instruction, Opcode, ProgramImage
from tools.isa_tools import EncodeRangeError, encode, format_instruction
from utils.constants import CODE_BASE, ENTRY_LABEL, INITIAL_SP, WORD_BYTES

logger = logging.getLogger(__name__)

_REG = r"r(\d{1,2})"
_IMM = r"(-?(?:0[xX][0-9a-fA-F]+|\d+))"
_LABEL = r"([A-Za-z_.$][\w.$]*)"
_TARGET = rf"({_IMM[1:-1]}|[A-Za-z_.$][\w.$]*)"

PATTERNS = {
    "alu": re.compile(rf"^{_REG}\s*,\s*{_REG}\s*,\s*{_REG}$"),
    "alui": re.compile(rf"^{_REG}\s*,\s*{_REG}\s*,\s*{_IMM}$"),
    "load": re.compile(rf"^{_REG}\s*,\s*{_IMM}\s*\(\s*{_REG}\s*\)$"),
    "store": re.compile(rf"^{_IMM}\s*\(\s*{_REG}\s*\)\s*,\s*{_REG}$"),
    "regs3": re.compile(rf"^{_REG}\s*,\s*{_REG}\s*,\s*{_REG}$"),
    "mtspr": re.compile(rf"^{_IMM}\s*,\s*{_IMM}$"),
    "mfspr": re.compile(rf"^{_REG}\s*,\s*{_IMM}$"),
    "branch": re.compile(rf"^{_REG}\s*,\s*{_REG}\s*,\s*{_TARGET}$"),
    "jal": re.compile(rf"^{_TARGET}$"),
    "jalr": re.compile(rf"^{_REG}$"),
}
LABEL_LINE = re.compile(rf"^{_LABEL}\s*:\s*(.*)$")


def _int(text: str) -> int:
    return int(text, 16) if "x" in text.lower() else int(text, 10)


def _is_number(text: str) -> bool:
    return bool(re.fullmatch(_IMM, text))


def assemble(program: AsmProgram, base: int = CODE_BASE, initial_sp: int = INITIAL_SP) -> ProgramImage:
    """
    Resolve labels and encode every instruction.

    Args:
        program: Assembly program; the entry point is the ``_start`` label
            when present, otherwise the first instruction
        base: Load address of the first word
        initial_sp: Stack pointer the loader installs

    Returns:
        ProgramImage with its symbol table

    Raises:
        AssemblerError: Duplicate or undefined labels, out-of-range operands
    """
    symbols: Dict[str, int] = {}
    pc = base
    for line in program.lines:
        if line.label is not None:
            if line.label in symbols:
                raise AssemblerError(f"duplicate label {line.label}")
            symbols[line.label] = pc
        if line.instr is not None:
            pc += WORD_BYTES

    words: List[int] = []
    pc = base
    for line in program.lines:
        instr = line.instr
        if instr is None:
            continue
        if line.target is not None:
            if line.target not in symbols:
                raise AssemblerError(f"undefined label {line.target}")
            address = symbols[line.target]
            if instr.op == Opcode.JAL:
                instr = instr.model_copy(update={"imm": address})
            elif instr.op in BRANCH_OPS:
                instr = instr.model_copy(update={"imm": (address - pc) // WORD_BYTES})
            else:
                raise AssemblerError(f"{instr.op.value} takes no label operand")
        try:
            words.append(encode(instr))
        except EncodeRangeError as e:
            raise AssemblerError(f"{format_instruction(instr, line.target)}: {e}")
        pc += WORD_BYTES

    entry = symbols.get(ENTRY_LABEL, base)
    logger.debug(f"Assembled {len(words)} words, entry {entry:#x}")
    return ProgramImage(entry_pc=entry, initial_sp=initial_sp, words=words, load_base=base, symbols=symbols)


def format_asm(program: AsmProgram) -> str:
    """Render an AsmProgram in the textual assembly format."""
    out: List[str] = []
    for line in program.lines:
        if line.label is not None:
            out.append(f"{line.label}:")
        if line.instr is not None:
            text = "    " + format_instruction(line.instr, line.target)
            if line.comment:
                text = f"{text:<32} ; {line.comment}"
            out.append(text)
    return "\n".join(out) + "\n"


def _parse_instruction(mnemonic: str, operands: str, lineno: int) -> AsmLine:
    try:
        op = Opcode(mnemonic)
    except ValueError:
        raise AssemblerError(f"unknown mnemonic {mnemonic!r}", line=lineno)

    def match(kind: str):
        found = PATTERNS[kind].match(operands)
        if found is None:
            raise AssemblerError(f"bad operands for {mnemonic}: {operands!r}", line=lineno)
        return found.groups()

    target: Optional[str] = None
    try:
        if op in ALU_OPS:
            rd, ra, rb = match("alu")
            instr = Instruction(op=op, rd=int(rd), ra=int(ra), rb=int(rb))
        elif op in ALUI_OPS:
            rd, ra, imm = match("alui")
            instr = Instruction(op=op, rd=int(rd), ra=int(ra), imm=_int(imm))
        elif op == Opcode.LOAD:
            rd, imm, ra = match("load")
            instr = Instruction.load(int(rd), int(ra), _int(imm))
        elif op == Opcode.STORE:
            imm, ra, rb = match("store")
            instr = Instruction.store(int(ra), _int(imm), int(rb))
        elif op == Opcode.LOADX:
            rd, ra, rx = match("regs3")
            instr = Instruction.loadx(int(rd), int(ra), int(rx))
        elif op == Opcode.STOREX:
            ra, rx, rb = match("regs3")
            instr = Instruction.storex(int(ra), int(rx), int(rb))
        elif op == Opcode.MTSPR:
            bit, value = match("mtspr")
            instr = Instruction.mtspr(_int(bit), _int(value))
        elif op == Opcode.MFSPR:
            rd, bit = match("mfspr")
            instr = Instruction.mfspr(int(rd), _int(bit))
        elif op in BRANCH_OPS:
            ra, rb, dest = match("branch")
            if _is_number(dest):
                instr = Instruction.branch(op.value, int(ra), int(rb), _int(dest))
            else:
                instr, target = Instruction.branch(op.value, int(ra), int(rb), 0), dest
        elif op == Opcode.JAL:
            (dest,) = match("jal")
            if _is_number(dest):
                instr = Instruction.jal(_int(dest))
            else:
                instr, target = Instruction.jal(0), dest
        elif op == Opcode.JALR:
            (ra,) = match("jalr")
            instr = Instruction.jalr(int(ra))
        else:
            if operands:
                raise AssemblerError("halt takes no operands", line=lineno)
            instr = Instruction.halt()
    except ValidationError as e:
        raise AssemblerError(f"invalid {mnemonic}: {e.errors()[0]['msg']}", line=lineno)
    return AsmLine(instr=instr, target=target)


def parse_asm(text: str) -> AsmProgram:
    """
    Parse assembly text: ``label:`` definitions, one instruction per line,
    ``;`` comments, decimal or hex immediates.

    Raises:
        AssemblerError: With the 1-based line number
    """
    lines: List[AsmLine] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code, _, comment = raw.partition(";")
        code = code.strip()
        while code:
            labelled = LABEL_LINE.match(code)
            if labelled is None:
                break
            lines.append(AsmLine(label=labelled.group(1)))
            code = labelled.group(2).strip()
        if not code:
            continue
        mnemonic, _, operands = code.partition(" ")
        parsed = _parse_instruction(mnemonic.lower(), operands.strip(), lineno)
        parsed.comment = comment.strip()
        lines.append(parsed)
    return AsmProgram(lines=lines)
