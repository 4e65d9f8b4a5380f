"""
Pointer lowering: fat (object_base, byte_offset) pairs under GANDALF, bare addresses otherwise.

A pointer derived from an object keeps that object's data start as its
object_base, so every dereference puts the data start in rA and the
protection unit checks the access against the object's own header.
"""

import logging
from typing import Optional

from compiler.errors import CompileError
from compiler.syntax import AddrOf, Binary, Deref, Expr, Index, Num, Var
from models.frame import BlockKind
from models.isa import Instruction
from utils.constants import IMM16_MAX, IMM16_MIN, REG_ADDR, REG_FP, REG_SP, REG_ZERO, WORD_BYTES

logger = logging.getLogger(__name__)

POINTER_KINDS = (BlockKind.POINTER, BlockKind.POINTER_PARAM)


def _fits_imm16(value: int) -> bool:
    return IMM16_MIN <= value <= IMM16_MAX


class PointerLowering:
    """
    Mixin for FunctionCodegen.

    Pointer values occupy T[d] (object_base, or the address in plain
    builds) and T[d+1] (byte_offset, GANDALF only).
    """

    # Provided by the host class
    gandalf: bool

    def is_pointer_expr(self, expr: Expr) -> bool:
        """Static type of an expression: pointer (True) or int (False)."""
        if isinstance(expr, Var):
            return self.lookup(expr).kind != BlockKind.SCALARS
        if isinstance(expr, AddrOf):
            return True
        if isinstance(expr, Binary) and expr.op in ("+", "-"):
            return self.is_pointer_expr(expr.left) or self.is_pointer_expr(expr.right)
        return False

    def pointer_width(self) -> int:
        return 2 if self.gandalf else 1

    def _offset_reg(self, d: int) -> int:
        return self.temp(d + 1) if self.gandalf else self.temp(d)

    def load_pointer_var(self, symbol, d: int) -> None:
        offset = self.layout.block(symbol.key).data_offset
        if self.gandalf:
            self.emit(Instruction.alui("add", REG_ADDR, REG_SP, offset))
            self.emit(Instruction.load(self.temp(d), REG_ADDR, 0))
            self.emit(Instruction.load(self.temp(d + 1), REG_ADDR, WORD_BYTES))
        else:
            self.emit(Instruction.load(self.temp(d), REG_SP, offset))

    def store_pointer_var(self, symbol, d: int) -> None:
        offset = self.layout.block(symbol.key).data_offset
        if self.gandalf:
            self.emit(Instruction.alui("add", REG_ADDR, REG_SP, offset), comment=f"{symbol.name} = pair")
            self.emit(Instruction.store(REG_ADDR, 0, self.temp(d)))
            self.emit(Instruction.store(REG_ADDR, WORD_BYTES, self.temp(d + 1)))
        else:
            self.emit(Instruction.store(REG_SP, offset, self.temp(d)), comment=f"{symbol.name} = address")

    def add_scaled(self, d: int, index: Expr, sign: int = 1) -> None:
        """Move the pointer in T[d].. by ``sign * index`` elements."""
        target = self._offset_reg(d)
        width = self.pointer_width()
        if isinstance(index, Num) and _fits_imm16(sign * index.value * WORD_BYTES):
            delta = sign * index.value * WORD_BYTES
            if delta:
                self.emit(Instruction.alui("add", target, target, delta))
            return
        scratch = self.temp(d + width)
        self.gen_int(index, d + width)
        self.emit(Instruction.alui("shl", scratch, scratch, 2))
        self.emit(Instruction.alu("add" if sign > 0 else "sub", target, target, scratch))

    def gen_ptr(self, expr: Expr, d: int) -> None:
        """
        Evaluate a pointer expression into T[d] (and T[d+1]).

        Raises:
            CompileError: If the expression does not denote an object
        """
        if isinstance(expr, Var):
            symbol = self.lookup(expr)
            if symbol.kind == BlockKind.ARRAY:
                self._array_base(symbol, d)
            elif symbol.kind in POINTER_KINDS:
                self.load_pointer_var(symbol, d)
            else:
                raise CompileError(f"{expr.name} is not a pointer or array", line=expr.line)
        elif isinstance(expr, AddrOf):
            self._address_of(expr.operand, d)
        elif isinstance(expr, Binary) and expr.op in ("+", "-"):
            left_ptr = self.is_pointer_expr(expr.left)
            right_ptr = self.is_pointer_expr(expr.right)
            if left_ptr and right_ptr:
                raise CompileError("pointer subtraction and pointer addition are not supported", line=expr.line)
            if right_ptr and expr.op == "-":
                raise CompileError("cannot subtract a pointer from an integer", line=expr.line)
            pointer, index = (expr.left, expr.right) if left_ptr else (expr.right, expr.left)
            self.gen_ptr(pointer, d)
            self.add_scaled(d, index, 1 if expr.op == "+" else -1)
        else:
            raise CompileError("expression does not denote an addressable object", line=getattr(expr, "line", None))

    def _array_base(self, symbol, d: int) -> None:
        offset = self.layout.block(symbol.key).data_offset
        self.emit(Instruction.alui("add", self.temp(d), REG_SP, offset), comment=f"&{symbol.name}")
        if self.gandalf:
            self.emit(Instruction.alui("add", self.temp(d + 1), REG_ZERO, 0))

    def _address_of(self, operand: Expr, d: int) -> None:
        if isinstance(operand, Var):
            symbol = self.lookup(operand)
            if symbol.kind == BlockKind.SCALARS:
                slot = self.scalar_slot(symbol)
                if self.gandalf:
                    self.emit(Instruction.alu("add", self.temp(d), REG_FP, REG_ZERO), comment=f"&{symbol.name}")
                    self.emit(Instruction.alui("add", self.temp(d + 1), REG_ZERO, slot))
                else:
                    self.emit(Instruction.alui("add", self.temp(d), REG_FP, slot), comment=f"&{symbol.name}")
                return
            if symbol.kind == BlockKind.ARRAY:
                self._array_base(symbol, d)
                return
            raise CompileError(f"cannot take the address of pointer {operand.name}", line=operand.line)
        if isinstance(operand, Index):
            self.gen_ptr(operand.base, d)
            self.add_scaled(d, operand.index)
            return
        if isinstance(operand, Deref):
            self.gen_ptr(operand.operand, d)
            return
        raise CompileError("cannot take the address of this expression", line=getattr(operand, "line", None))

    def element_access(self, base: Expr, index: Expr, d: int, store_src: Optional[int] = None) -> None:
        """
        Load ``base[index]`` into T[d], or store register ``store_src`` there.

        Named arrays with constant subscripts use the displacement form with
        the array's data start in rA; everything else goes through the
        pointer pair and the indexed form.
        """
        if isinstance(base, Var) and isinstance(index, Num):
            symbol = self.lookup(base)
            displacement = index.value * WORD_BYTES
            if symbol.kind == BlockKind.ARRAY and _fits_imm16(displacement):
                data_offset = self.layout.block(symbol.key).data_offset
                if self.gandalf:
                    rA = self.temp(d)
                    self.emit(Instruction.alui("add", rA, REG_SP, data_offset), comment=f"&{symbol.name}")
                elif _fits_imm16(data_offset + displacement):
                    rA, displacement = REG_SP, data_offset + displacement
                else:
                    rA = self.temp(d)
                    self.emit(Instruction.alui("add", rA, REG_SP, data_offset))
                self._access(rA, displacement, d, store_src)
                return
        self.gen_ptr(base, d)
        self.add_scaled(d, index)
        self._access_pair(d, store_src)

    def deref_access(self, pointer: Expr, d: int, store_src: Optional[int] = None) -> None:
        """Load ``*pointer`` into T[d], or store ``store_src`` through it."""
        self.gen_ptr(pointer, d)
        self._access_pair(d, store_src)

    def _access(self, rA: int, displacement: int, d: int, store_src: Optional[int]) -> None:
        if store_src is None:
            self.emit(Instruction.load(self.temp(d), rA, displacement))
        else:
            self.emit(Instruction.store(rA, displacement, store_src))

    def _access_pair(self, d: int, store_src: Optional[int]) -> None:
        if not self.gandalf:
            self._access(self.temp(d), 0, d, store_src)
        elif store_src is None:
            self.emit(Instruction.loadx(self.temp(d), self.temp(d), self.temp(d + 1)))
        else:
            self.emit(Instruction.storex(self.temp(d), self.temp(d + 1), store_src))
