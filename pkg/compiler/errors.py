"""
Compiler error hierarchy.
"""

from typing import Optional


class CompileError(Exception):
    """Error in a mini-G program or its translation, with an optional source position."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(self.__str__())

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


class MiniGSyntaxError(CompileError):
    """Lexical or grammatical error."""
    pass


class AssemblerError(CompileError):
    """Undefined label, duplicate label, or unencodable operand in assembly."""
    pass
