"""
mini-G compiler: parser, frame layout, code generation and assembly.
"""

from compiler.assembler import assemble, format_asm, parse_asm
from compiler.codegen import compile_program, emit_prologue, verify_phwe_bracketing
from compiler.errors import AssemblerError, CompileError, MiniGSyntaxError
from compiler.layout import layout_frame
from compiler.parser import parse
from models.asm import AsmProgram
from models.isa import ProgramImage


def compile_source(source: str, gandalf: bool) -> AsmProgram:
    """Parse and compile mini-G source text."""
    return compile_program(parse(source), gandalf)


def build_image(source: str, gandalf: bool) -> ProgramImage:
    """Source text straight to a loadable image."""
    return assemble(compile_source(source, gandalf))


__all__ = [
    "AssemblerError",
    "CompileError",
    "MiniGSyntaxError",
    "assemble",
    "build_image",
    "compile_program",
    "compile_source",
    "emit_prologue",
    "format_asm",
    "layout_frame",
    "parse",
    "parse_asm",
    "verify_phwe_bracketing",
]
