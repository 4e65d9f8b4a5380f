"""
mini-G code generator: naive three-address code with optional GANDALF instrumentation.
"""

import logging
from typing import Dict, List, Optional, Tuple

from compiler.errors import CompileError
from compiler.layout import (
    FP_SLOT,
    RA_SLOT,
    SCALAR_BLOCK,
    layout_frame,
    pointer_bytes,
    slot_names,
)
from compiler.pointers import PointerLowering
from compiler.syntax import (
    AddrOf,
    Assign,
    Binary,
    Block,
    Call,
    Decl,
    DeclKind,
    Deref,
    Exit,
    Expr,
    ExprStmt,
    Function,
    If,
    Index,
    Neg,
    Num,
    Program,
    Return,
    Var,
    While,
)
from models.asm import AsmLine, AsmProgram, FunctionCounts
from models.frame import BlockKind, FrameLayout
from models.isa import Instruction, Opcode
from tools.isa_tools import sign_extend16
from utils.constants import (
    ARG_REGISTERS,
    ENTRY_LABEL,
    GEB_BIT,
    IMM16_MAX,
    IMM16_MIN,
    PHWE_BIT,
    REG_ADDR,
    REG_ADDR2,
    REG_FP,
    REG_LINK,
    REG_RETURN,
    REG_SCRATCH,
    REG_SP,
    REG_ZERO,
    TEMP_REGISTERS,
    WORD_BYTES,
    WORD_MASK,
)
from utils.logging_utils import signed_word

logger = logging.getLogger(__name__)

ALU_BY_OPERATOR = {"+": "add", "-": "sub", "*": "mul", "&": "and", "|": "or", "<<": "shl"}

# operator -> (branch, swap operands, r10 value when the branch is taken)
COMPARISONS = {
    "<": (Opcode.BLT, False, 1),
    ">": (Opcode.BLT, True, 1),
    "<=": (Opcode.BLT, True, 0),
    ">=": (Opcode.BLT, False, 0),
    "==": (Opcode.BEQ, False, 1),
    "!=": (Opcode.BNE, False, 1),
}

# Extra instructions every instrumented function carries even with no variables:
# the PHWE pair, the system block header (3 stores and 3 address moves), the
# system block address in the prologue and again in the epilogue.
FUNCTION_BOILERPLATE = 2 + 6 + 1 + 1
STUB_BOILERPLATE = 1


def boilerplate_count(num_functions: int) -> int:
    """Static instruction overhead of GANDALF for a program without variables."""
    return STUB_BOILERPLATE + FUNCTION_BOILERPLATE * num_functions


class Symbol:
    """A name visible in some scope, bound to a frame slot or block."""

    def __init__(self, name: str, key: str, kind: BlockKind):
        self.name = name
        self.key = key
        self.kind = kind

    def __repr__(self) -> str:
        return f"Symbol({self.name!r}, {self.key!r}, {self.kind.value})"


class Scope:
    """Lexical scope chain."""

    def __init__(self, parent: Optional["Scope"] = None):
        self.parent = parent
        self.symbols: Dict[str, Symbol] = {}

    def add(self, symbol: Symbol, line: int = 0) -> None:
        if symbol.name in self.symbols:
            raise CompileError(f"redeclaration of {symbol.name}", line=line)
        self.symbols[symbol.name] = symbol

    def lookup(self, name: str) -> Optional[Symbol]:
        scope = self
        while scope is not None:
            if name in scope.symbols:
                return scope.symbols[name]
            scope = scope.parent
        return None


def load_const(reg: int, value: int) -> List[Instruction]:
    """Materialize a 32-bit constant with ADDI, or ADDI/SHLI/ADDI."""
    signed = signed_word(value & WORD_MASK)
    if IMM16_MIN <= signed <= IMM16_MAX:
        return [Instruction.alui("add", reg, REG_ZERO, signed)]
    low = sign_extend16(signed)
    high = sign_extend16((signed - low) >> 16)
    sequence = [
        Instruction.alui("add", reg, REG_ZERO, high),
        Instruction.alui("shl", reg, reg, 16),
    ]
    if low:
        sequence.append(Instruction.alui("add", reg, reg, low))
    return sequence


def emit_prologue(layout: FrameLayout) -> List[AsmLine]:
    """
    Header population for every headered block of a frame.

    MTSPR(18,1), then per block: magic word := its own address,
    base := data start - 1, bound := data start + size; then MTSPR(18,0).
    Offsets are relative to the already-allocated stack pointer.

    Raises:
        CompileError: For a layout built without GANDALF
    """
    if not layout.gandalf:
        raise CompileError(f"frame of {layout.function} has no Protection-Headers to populate")
    lines = [AsmLine(instr=Instruction.mtspr(PHWE_BIT, 1), comment="header writes on")]
    for block in layout.headered_blocks:
        lines.extend([
            AsmLine(instr=Instruction.alui("add", REG_ADDR, REG_SP, block.header_offset), comment=f"header of {block.name}"),
            AsmLine(instr=Instruction.store(REG_ADDR, 0, REG_ADDR)),
            AsmLine(instr=Instruction.alui("add", REG_ADDR2, REG_SP, block.data_offset - 1)),
            AsmLine(instr=Instruction.store(REG_ADDR, 4, REG_ADDR2)),
            AsmLine(instr=Instruction.alui("add", REG_ADDR2, REG_SP, block.end_offset)),
            AsmLine(instr=Instruction.store(REG_ADDR, 8, REG_ADDR2)),
        ])
    lines.append(AsmLine(instr=Instruction.mtspr(PHWE_BIT, 0), comment="header writes off"))
    return lines


class FunctionCodegen(PointerLowering):
    """Compiles one function; see ``compile``."""

    def __init__(self, fn: Function, signatures: Dict[str, List[bool]], gandalf: bool):
        self.fn = fn
        self.signatures = signatures
        self.gandalf = gandalf
        self.lines: List[AsmLine] = []
        self.names = slot_names(fn)
        self.layout = layout_frame(fn, gandalf)
        self.scope = Scope()
        self.max_spill = 0
        self._label_count = 0
        self.return_label = f".{fn.name}.ret"

    # Emission helpers

    def emit(self, instr: Instruction, target: Optional[str] = None, comment: str = "") -> None:
        self.lines.append(AsmLine(instr=instr, target=target, comment=comment))

    def label(self, name: str) -> None:
        self.lines.append(AsmLine(label=name))

    def new_label(self) -> str:
        self._label_count += 1
        return f".{self.fn.name}.L{self._label_count}"

    def jump(self, target: str) -> None:
        self.emit(Instruction.branch("beq", REG_ZERO, REG_ZERO, 0), target=target)

    def temp(self, depth: int) -> int:
        if depth >= len(TEMP_REGISTERS):
            raise CompileError(f"expression in {self.fn.name} is too deeply nested", line=self.fn.line)
        return TEMP_REGISTERS[depth]

    def load_const(self, reg: int, value: int) -> None:
        for instr in load_const(reg, value):
            self.emit(instr)

    # Symbols

    def lookup(self, var: Var) -> Symbol:
        symbol = self.scope.lookup(var.name)
        if symbol is None:
            raise CompileError(f"undeclared variable {var.name}", line=var.line)
        return symbol

    def scalar_slot(self, symbol: Symbol) -> int:
        return self.layout.block(SCALAR_BLOCK).slots[symbol.key]

    def spill_offset(self, index: int) -> int:
        return self.layout.block(SCALAR_BLOCK).size + index * WORD_BYTES

    def _declare(self, item, kind: BlockKind) -> Symbol:
        symbol = Symbol(item.name, self.names[id(item)], kind)
        self.scope.add(symbol, item.line)
        return symbol

    # Expressions

    def gen_int(self, expr: Expr, d: int) -> None:
        """Evaluate an int expression into T[d]."""
        if isinstance(expr, Num):
            self.load_const(self.temp(d), expr.value)
        elif isinstance(expr, Var):
            symbol = self.lookup(expr)
            if symbol.kind != BlockKind.SCALARS:
                raise CompileError(f"{expr.name} is not an int", line=expr.line)
            self.emit(Instruction.load(self.temp(d), REG_FP, self.scalar_slot(symbol)))
        elif isinstance(expr, Index):
            self.element_access(expr.base, expr.index, d)
        elif isinstance(expr, Deref):
            self.deref_access(expr.operand, d)
        elif isinstance(expr, Neg):
            self.gen_int(expr.operand, d)
            self.emit(Instruction.alu("sub", self.temp(d), REG_ZERO, self.temp(d)))
        elif isinstance(expr, Binary):
            self._gen_binary(expr, d)
        elif isinstance(expr, Call):
            self.gen_call(expr, d)
        elif isinstance(expr, AddrOf):
            raise CompileError("address used as an int", line=expr.line)
        else:
            raise CompileError(f"unsupported expression {type(expr).__name__}")

    def _gen_binary(self, expr: Binary, d: int) -> None:
        if self.is_pointer_expr(expr.left) or self.is_pointer_expr(expr.right):
            if expr.op in COMPARISONS:
                raise CompileError("pointer comparison is not supported", line=expr.line)
            raise CompileError(f"pointer operand of {expr.op!r} used as an int", line=expr.line)
        result = self.temp(d)
        self.gen_int(expr.left, d)
        if expr.op in ALU_BY_OPERATOR:
            name = ALU_BY_OPERATOR[expr.op]
            if isinstance(expr.right, Num) and IMM16_MIN <= expr.right.value <= IMM16_MAX:
                self.emit(Instruction.alui(name, result, result, expr.right.value))
                return
            self.gen_int(expr.right, d + 1)
            self.emit(Instruction.alu(name, result, result, self.temp(d + 1)))
            return
        branch, swap, taken_value = COMPARISONS[expr.op]
        self.gen_int(expr.right, d + 1)
        a, b = result, self.temp(d + 1)
        if swap:
            a, b = b, a
        done = self.new_label()
        self.emit(Instruction.alui("add", REG_SCRATCH, REG_ZERO, taken_value))
        self.emit(Instruction.branch(branch.value, a, b, 0), target=done)
        self.emit(Instruction.alui("add", REG_SCRATCH, REG_ZERO, 1 - taken_value))
        self.label(done)
        self.emit(Instruction.alu("add", result, REG_SCRATCH, REG_ZERO))

    def gen_call(self, call: Call, d: int) -> None:
        """
        Call into T[d]. Arguments are evaluated into T[d..], live temporaries
        T[0..d-1] are spilled to frame slots around the JAL.
        """
        if call.name not in self.signatures:
            raise CompileError(f"call to undefined function {call.name}", line=call.line)
        params = self.signatures[call.name]
        if len(params) != len(call.args):
            raise CompileError(
                f"{call.name} expects {len(params)} arguments, got {len(call.args)}", line=call.line
            )
        cursor = d
        for arg, is_pointer in zip(call.args, params):
            if is_pointer:
                if not self.is_pointer_expr(arg):
                    raise CompileError(f"argument of {call.name} must be a pointer", line=call.line)
                self.gen_ptr(arg, cursor)
                cursor += self.pointer_width()
            else:
                if self.is_pointer_expr(arg):
                    raise CompileError(f"argument of {call.name} must be an int", line=call.line)
                self.gen_int(arg, cursor)
                cursor += 1

        self.max_spill = max(self.max_spill, d)
        for i in range(d):
            self.emit(Instruction.store(REG_FP, self.spill_offset(i), self.temp(i)), comment="spill")
        for j in range(cursor - d):
            self.emit(Instruction.alu("add", ARG_REGISTERS[j], self.temp(d + j), REG_ZERO))
        self.emit(Instruction.jal(0), target=call.name)
        self.emit(Instruction.alu("add", self.temp(d), REG_RETURN, REG_ZERO))
        for i in range(d):
            self.emit(Instruction.load(self.temp(i), REG_FP, self.spill_offset(i)), comment="reload")

    # Statements

    def gen_stmt(self, stmt) -> None:
        if isinstance(stmt, Decl):
            self._gen_decl(stmt)
        elif isinstance(stmt, Assign):
            self._gen_assign(stmt.target, stmt.value, stmt.line)
        elif isinstance(stmt, ExprStmt):
            self.gen_call(stmt.expr, 0)
        elif isinstance(stmt, Block):
            self.scope = Scope(self.scope)
            for inner in stmt.statements:
                self.gen_stmt(inner)
            self.scope = self.scope.parent
        elif isinstance(stmt, If):
            otherwise, end = self.new_label(), self.new_label()
            self._gen_condition(stmt.cond, otherwise)
            self.gen_stmt(stmt.then)
            if stmt.otherwise is not None:
                self.jump(end)
                self.label(otherwise)
                self.gen_stmt(stmt.otherwise)
                self.label(end)
            else:
                self.label(otherwise)
        elif isinstance(stmt, While):
            top, end = self.new_label(), self.new_label()
            self.label(top)
            self._gen_condition(stmt.cond, end)
            self.gen_stmt(stmt.body)
            self.jump(top)
            self.label(end)
        elif isinstance(stmt, (Return, Exit)):
            if self.is_pointer_expr(stmt.value):
                raise CompileError("functions return int", line=stmt.line)
            self.gen_int(stmt.value, 0)
            self.emit(Instruction.alu("add", REG_RETURN, self.temp(0), REG_ZERO))
            if isinstance(stmt, Return):
                self.jump(self.return_label)
            else:
                self.emit(Instruction.halt(), comment="exit")
        else:
            raise CompileError(f"unsupported statement {type(stmt).__name__}")

    def _gen_condition(self, cond: Expr, false_label: str) -> None:
        self.gen_int(cond, 0)
        self.emit(Instruction.branch("beq", self.temp(0), REG_ZERO, 0), target=false_label)

    def _gen_decl(self, decl: Decl) -> None:
        kind = {
            DeclKind.SCALAR: BlockKind.SCALARS,
            DeclKind.ARRAY: BlockKind.ARRAY,
            DeclKind.POINTER: BlockKind.POINTER,
        }[decl.kind]
        if decl.init is not None:
            # The initializer sees the enclosing binding of a shadowed name.
            self._gen_assign_to(self._pending_symbol(decl, kind), decl.init, decl.line)
        self._declare(decl, kind)

    def _pending_symbol(self, decl: Decl, kind: BlockKind) -> Symbol:
        return Symbol(decl.name, self.names[id(decl)], kind)

    def _gen_assign(self, target: Expr, value: Expr, line: int) -> None:
        if isinstance(target, Var):
            self._gen_assign_to(self.lookup(target), value, line)
        elif isinstance(target, Index):
            self._require_int(value, line)
            self.gen_int(value, 0)
            self.element_access(target.base, target.index, 1, store_src=self.temp(0))
        elif isinstance(target, Deref):
            self._require_int(value, line)
            self.gen_int(value, 0)
            self.deref_access(target.operand, 1, store_src=self.temp(0))
        else:
            raise CompileError("left side of assignment is not assignable", line=line)

    def _gen_assign_to(self, symbol: Symbol, value: Expr, line: int) -> None:
        if symbol.kind == BlockKind.SCALARS:
            self._require_int(value, line)
            self.gen_int(value, 0)
            self.emit(Instruction.store(REG_FP, self.scalar_slot(symbol), self.temp(0)), comment=symbol.name)
        elif symbol.kind in (BlockKind.POINTER, BlockKind.POINTER_PARAM):
            if not self.is_pointer_expr(value):
                raise CompileError(f"pointer {symbol.name} must be assigned a pointer", line=line)
            self.gen_ptr(value, 0)
            self.store_pointer_var(symbol, 0)
        else:
            raise CompileError(f"cannot assign to array {symbol.name}", line=line)

    def _require_int(self, value: Expr, line: int) -> None:
        if self.is_pointer_expr(value):
            raise CompileError("cannot store a pointer into an int", line=line)

    # Frame setup

    def _frame_setup(self, layout: FrameLayout) -> List[AsmLine]:
        lines = [AsmLine(instr=Instruction.alui("add", REG_SP, REG_SP, -layout.frame_size), comment="allocate frame")]
        system = layout.system_block
        scalars = layout.scalar_block
        if self.gandalf:
            lines.extend(emit_prologue(layout))
            lines.append(AsmLine(instr=Instruction.alui("add", REG_ADDR, REG_SP, system.data_offset)))
            lines.append(AsmLine(instr=Instruction.store(REG_ADDR, system.slots[RA_SLOT], REG_LINK), comment="save ra"))
            lines.append(AsmLine(instr=Instruction.store(REG_ADDR, system.slots[FP_SLOT], REG_FP), comment="save fp"))
        else:
            lines.append(AsmLine(instr=Instruction.store(REG_SP, system.data_offset + system.slots[RA_SLOT], REG_LINK), comment="save ra"))
            lines.append(AsmLine(instr=Instruction.store(REG_SP, system.data_offset + system.slots[FP_SLOT], REG_FP), comment="save fp"))
        lines.append(AsmLine(instr=Instruction.alui("add", REG_FP, REG_SP, scalars.data_offset), comment="frame pointer"))

        arg = 0
        for param in self.fn.params:
            key = self.names[id(param)]
            if param.is_pointer:
                offset = layout.block(key).data_offset
                if self.gandalf:
                    lines.append(AsmLine(instr=Instruction.alui("add", REG_ADDR, REG_SP, offset)))
                    lines.append(AsmLine(instr=Instruction.store(REG_ADDR, 0, ARG_REGISTERS[arg]), comment=param.name))
                    lines.append(AsmLine(instr=Instruction.store(REG_ADDR, WORD_BYTES, ARG_REGISTERS[arg + 1])))
                else:
                    lines.append(AsmLine(instr=Instruction.store(REG_SP, offset, ARG_REGISTERS[arg]), comment=param.name))
                arg += pointer_bytes(self.gandalf) // WORD_BYTES
            else:
                lines.append(AsmLine(instr=Instruction.store(REG_FP, scalars.slots[key], ARG_REGISTERS[arg]), comment=param.name))
                arg += 1
        return lines

    def _epilogue(self, layout: FrameLayout) -> List[AsmLine]:
        system = layout.system_block
        if self.gandalf:
            lines = [
                AsmLine(instr=Instruction.alui("add", REG_ADDR, REG_SP, system.data_offset)),
                AsmLine(instr=Instruction.load(REG_LINK, REG_ADDR, system.slots[RA_SLOT])),
                AsmLine(instr=Instruction.load(REG_FP, REG_ADDR, system.slots[FP_SLOT])),
            ]
        else:
            lines = [
                AsmLine(instr=Instruction.load(REG_LINK, REG_SP, system.data_offset + system.slots[RA_SLOT])),
                AsmLine(instr=Instruction.load(REG_FP, REG_SP, system.data_offset + system.slots[FP_SLOT])),
            ]
        lines.append(AsmLine(instr=Instruction.alui("add", REG_SP, REG_SP, layout.frame_size), comment="release frame"))
        lines.append(AsmLine(instr=Instruction.jalr(REG_LINK)))
        return lines

    def compile(self) -> Tuple[List[AsmLine], FrameLayout]:
        """
        Generate the whole function.

        The body is generated first so the number of spill slots is known
        when the final layout and the prologue are built.

        Returns:
            (assembly lines starting with the function label, final layout)
        """
        arg_words = sum(2 if p.is_pointer else 1 for p in self.fn.params)
        if arg_words > len(ARG_REGISTERS):
            raise CompileError(f"{self.fn.name} takes {arg_words} argument words, at most {len(ARG_REGISTERS)}", line=self.fn.line)
        for param in self.fn.params:
            self._declare(param, BlockKind.POINTER_PARAM if param.is_pointer else BlockKind.SCALARS)

        self.scope = Scope(self.scope)
        for stmt in self.fn.body.statements:
            self.gen_stmt(stmt)
        body = self.lines

        layout = layout_frame(self.fn, self.gandalf, self.max_spill)
        lines = [AsmLine(label=self.fn.name)]
        lines.extend(self._frame_setup(layout))
        lines.extend(body)
        lines.append(AsmLine(label=self.return_label))
        lines.extend(self._epilogue(layout))
        self.lines = lines
        self.layout = layout
        return lines, layout


def _entry_stub(gandalf: bool) -> List[AsmLine]:
    lines = [AsmLine(label=ENTRY_LABEL)]
    if gandalf:
        lines.append(AsmLine(instr=Instruction.mtspr(GEB_BIT, 1), comment="enable checks"))
    lines.append(AsmLine(instr=Instruction.jal(0), target="main"))
    lines.append(AsmLine(instr=Instruction.halt()))
    return lines


def _compile_variant(program: Program, gandalf: bool) -> Tuple[List[AsmLine], Dict[str, FrameLayout], Dict[str, int], int]:
    signatures: Dict[str, List[bool]] = {}
    for fn in program.functions:
        if fn.name in signatures or fn.name == ENTRY_LABEL:
            raise CompileError(f"duplicate function {fn.name}", line=fn.line)
        signatures[fn.name] = [p.is_pointer for p in fn.params]
    main = program.function("main")
    if main is None:
        raise CompileError("program has no main function")
    if main.params:
        raise CompileError("main takes no parameters", line=main.line)

    stub = _entry_stub(gandalf)
    lines = list(stub)
    layouts: Dict[str, FrameLayout] = {}
    counts: Dict[str, int] = {}
    for fn in program.functions:
        fn_lines, layout = FunctionCodegen(fn, signatures, gandalf).compile()
        lines.extend(fn_lines)
        layouts[fn.name] = layout
        counts[fn.name] = sum(1 for line in fn_lines if line.is_instruction)
    stub_count = sum(1 for line in stub if line.is_instruction)
    return lines, layouts, counts, stub_count


def compile_program(program: Program, gandalf: bool) -> AsmProgram:
    """
    Compile a parsed program.

    Both build modes are generated so the metadata carries the static
    instruction counts of each; the returned lines are the requested mode.

    Args:
        program: Parsed mini-G program
        gandalf: Emit GANDALF instrumentation

    Returns:
        AsmProgram ready for ``assemble``

    Raises:
        CompileError: On type, scope or resource errors
    """
    instrumented = _compile_variant(program, True)
    plain = _compile_variant(program, False)
    chosen = instrumented if gandalf else plain
    lines, layouts, _, _ = chosen
    counts = {
        name: FunctionCounts(instrumented=instrumented[2][name], plain=plain[2][name])
        for name in instrumented[2]
    }
    asm = AsmProgram(
        lines=lines,
        gandalf=gandalf,
        function_counts=counts,
        stub_counts=FunctionCounts(instrumented=instrumented[3], plain=plain[3]),
        layouts=layouts,
    )
    logger.debug(
        f"Compiled {len(program.functions)} functions: {asm.instrumented_count} instrumented / "
        f"{asm.plain_count} plain instructions"
    )
    return asm


def verify_phwe_bracketing(asm: AsmProgram) -> List[str]:
    """
    Static check that header stores happen only with PHWE set.

    Tracks the SP-relative value of the address scratch register per
    function. Stores through expression temporaries are user accesses and
    are left to the runtime check; a compiler store whose target falls in a header region must sit
    between MTSPR(18,1) and MTSPR(18,0), and every store inside that
    bracket must target a header region.

    Returns:
        Violation descriptions (empty when the program is well bracketed)
    """
    violations: List[str] = []
    layout: Optional[FrameLayout] = None
    function = ""
    scratch: Optional[int] = None
    bracket = False
    for index, line in enumerate(asm.lines):
        if line.label in asm.layouts:
            function, layout, scratch, bracket = line.label, asm.layouts[line.label], None, False
        instr = line.instr
        if instr is None or layout is None:
            continue
        if instr.op == Opcode.MTSPR and instr.imm == PHWE_BIT:
            bracket = bool(instr.rb)
            continue
        if instr.rd == REG_ADDR and instr.op not in (Opcode.STORE, Opcode.STOREX):
            scratch = instr.imm if instr.op == Opcode.ADDI and instr.ra == REG_SP else None
            continue
        if instr.op not in (Opcode.STORE, Opcode.STOREX):
            continue
        target = None
        if instr.op == Opcode.STORE:
            if instr.ra == REG_SP:
                target = instr.imm
            elif instr.ra == REG_FP:
                target = layout.scalar_block.data_offset + instr.imm
            elif instr.ra == REG_ADDR and scratch is not None:
                target = scratch + instr.imm
        in_header = target is not None and any(
            b.header_offset <= target < b.data_offset for b in layout.headered_blocks
        )
        if in_header and not bracket:
            violations.append(f"{function}: header store at line {index} outside the PHWE bracket")
        if bracket and not in_header:
            violations.append(f"{function}: non-header store at line {index} inside the PHWE bracket")
    return violations
