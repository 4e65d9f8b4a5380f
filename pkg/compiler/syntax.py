"""
Abstract syntax tree for mini-G programs.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Union


@dataclass
class Num:
    value: int
    line: int = 0


@dataclass
class Var:
    name: str
    line: int = 0


@dataclass
class Index:
    base: "Expr"
    index: "Expr"
    line: int = 0


@dataclass
class Deref:
    operand: "Expr"
    line: int = 0


@dataclass
class AddrOf:
    operand: "Expr"
    line: int = 0


@dataclass
class Neg:
    operand: "Expr"
    line: int = 0


@dataclass
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = 0


@dataclass
class Call:
    name: str
    args: List["Expr"] = field(default_factory=list)
    line: int = 0


Expr = Union[Num, Var, Index, Deref, AddrOf, Neg, Binary, Call]


class DeclKind:
    SCALAR = "scalar"
    ARRAY = "array"
    POINTER = "pointer"


@dataclass(eq=False)
class Decl:
    """Local declaration; ``size`` is the element count for arrays."""
    name: str
    kind: str
    size: int = 1
    init: Optional[Expr] = None
    line: int = 0


@dataclass
class Assign:
    target: Expr
    value: Expr
    line: int = 0


@dataclass
class ExprStmt:
    expr: Call
    line: int = 0


@dataclass
class Block:
    statements: List["Stmt"] = field(default_factory=list)
    line: int = 0


@dataclass
class If:
    cond: Expr
    then: "Stmt"
    otherwise: Optional["Stmt"] = None
    line: int = 0


@dataclass
class While:
    cond: Expr
    body: "Stmt"
    line: int = 0


@dataclass
class Return:
    value: Expr
    line: int = 0


@dataclass
class Exit:
    value: Expr
    line: int = 0


Stmt = Union[Decl, Assign, ExprStmt, Block, If, While, Return, Exit]


@dataclass(eq=False)
class Param:
    name: str
    is_pointer: bool = False
    line: int = 0


@dataclass
class Function:
    name: str
    params: List[Param]
    body: Block
    line: int = 0

    def declarations(self) -> List[Decl]:
        """Every local declaration in source order, nested blocks included."""
        found: List[Decl] = []

        def walk(stmt) -> None:
            if isinstance(stmt, Decl):
                found.append(stmt)
            elif isinstance(stmt, Block):
                for inner in stmt.statements:
                    walk(inner)
            elif isinstance(stmt, If):
                walk(stmt.then)
                if stmt.otherwise is not None:
                    walk(stmt.otherwise)
            elif isinstance(stmt, While):
                walk(stmt.body)

        walk(self.body)
        return found


@dataclass
class Program:
    functions: List[Function] = field(default_factory=list)

    def function(self, name: str) -> Optional[Function]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None
