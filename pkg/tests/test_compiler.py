"""
mini-G compiler tests: parsing, frame layout, header population, pointer
inheritance, the PHWE bracket and code-size accounting.
"""

import pytest

from agents.simulator import Simulator, run_image
from compiler import (
    AssemblerError,
    CompileError,
    MiniGSyntaxError,
    assemble,
    build_image,
    compile_source,
    emit_prologue,
    format_asm,
    layout_frame,
    parse,
    parse_asm,
    verify_phwe_bracketing,
)
from compiler.codegen import boilerplate_count, load_const
from compiler.lexer import MiniGLexer
from compiler.syntax import AddrOf, Binary, Decl, DeclKind, Index, Num, Var
from models.asm import AsmLine, AsmProgram
from models.frame import BlockKind, FrameBlock, FrameLayout
from models.isa import Instruction, Opcode
from models.run import RunStatus
from utils.constants import INITIAL_SP, PHWE_BIT, REG_RETURN, REG_SP, REG_ZERO

ONE_SCALAR = "int main() { int x; x = 3; return x; }"
ONE_ARRAY = "int main() { int a[4]; a[0] = 1; return a[0]; }"


def both_modes(source: str):
    return [run_image(build_image(source, gandalf)) for gandalf in (True, False)]


class TestParser:
    """Source text to AST."""

    def test_main_example(self):
        program = parse("int main() {\n    int a[4];\n    int *p = a;\n    return 0;\n}\n")
        main = program.function("main")
        decls = main.declarations()
        assert [d.name for d in decls] == ["a", "p"]
        assert decls[0].kind == DeclKind.ARRAY and decls[0].size == 4
        assert decls[1].kind == DeclKind.POINTER

    def test_pointer_arithmetic_shape(self):
        program = parse("int main() { int a[15]; int *p = &a[14] + 4; return 0; }")
        decl = program.function("main").body.statements[1]
        assert isinstance(decl, Decl)
        init = decl.init
        assert isinstance(init, Binary) and init.op == "+"
        assert isinstance(init.left, AddrOf)
        assert isinstance(init.left.operand, Index)
        assert init.left.operand.base == Var(name="a", line=1)
        assert init.right == Num(value=4, line=1)

    def test_syntax_error_position(self):
        with pytest.raises(MiniGSyntaxError) as excinfo:
            parse("int main() {\n    int x = ;\n}")
        assert (excinfo.value.line, excinfo.value.column) == (2, 13)
        assert str(excinfo.value).startswith("line 2, column 13")

    def test_illegal_character(self):
        with pytest.raises(MiniGSyntaxError):
            parse("int main() { return 1 @ 2; }")

    def test_comments_and_hex(self):
        tokens = MiniGLexer().build().tokenize("/* a\n b */ x = 0x1F; // tail")
        assert [t.type for t in tokens] == ["ID", "ASSIGN", "NUMBER", "SEMI"]
        assert tokens[2].value == 31
        assert tokens[0].lineno == 2

    def test_assignment_to_non_lvalue(self):
        with pytest.raises(MiniGSyntaxError):
            parse("int main() { 1 = 2; return 0; }")


class TestFrameLayout:
    """Block placement and header reservation."""

    def test_one_scalar(self):
        layout = layout_frame(parse(ONE_SCALAR).function("main"), gandalf=True)
        assert layout.frame_size == 36
        assert layout.header_bytes == 24
        assert layout.data_bytes == 12
        scalars = layout.scalar_block
        assert (scalars.header_offset, scalars.data_offset, scalars.slots) == (0, 12, {"x": 0})

    def test_array_block(self):
        layout = layout_frame(parse(ONE_ARRAY).function("main"), gandalf=True)
        block = layout.block("a")
        assert (block.header_offset, block.data_offset, block.size) == (0, 12, 16)
        assert layout.system_block.header_offset == 28
        assert layout.system_block.data_offset == 40

    def test_plain_layout_has_no_headers(self):
        layout = layout_frame(parse(ONE_ARRAY).function("main"), gandalf=False)
        assert layout.header_bytes == 0
        assert layout.frame_size == 16 + 8

    def test_empty_scalar_block_is_headerless(self):
        layout = layout_frame(parse("int main() { return 7; }").function("main"), gandalf=True)
        assert not layout.scalar_block.has_header
        assert layout.header_bytes == 12

    def test_block_order(self):
        source = "int f(int n, int *q) { int x; int b[2]; int *r; return n; } int main() { return 0; }"
        layout = layout_frame(parse(source).function("f"), gandalf=True)
        kinds = [b.kind for b in layout.blocks]
        assert kinds == [BlockKind.POINTER_PARAM, BlockKind.ARRAY, BlockKind.POINTER, BlockKind.SCALARS, BlockKind.SYSTEM]
        assert layout.scalar_block.slots == {"n": 0, "x": 4}
        assert layout.block("q").size == 8

    def test_dump_with_stack_pointer(self):
        layout = layout_frame(parse(ONE_ARRAY).function("main"), gandalf=True)
        dumped = layout.dump(0x80012344)
        assert dumped["blocks"][0]["header_addresses"] == [0x80012344, 0x80012348, 0x8001234C]
        assert dumped["blocks"][0]["data_start"] == 0x80012350


class TestPrologue:
    """Header population inside the PHWE bracket."""

    def test_store_count(self):
        layout = layout_frame(parse(ONE_ARRAY.replace("int a[4];", "int a[4]; int y;")).function("main"), gandalf=True)
        lines = emit_prologue(layout)
        stores = [line for line in lines if line.instr.op == Opcode.STORE]
        assert len(layout.headered_blocks) == 3
        assert len(stores) == 9
        assert lines[0].instr == Instruction.mtspr(PHWE_BIT, 1)
        assert lines[-1].instr == Instruction.mtspr(PHWE_BIT, 0)

    def test_no_blocks(self):
        assert len(emit_prologue(FrameLayout(function="f", gandalf=True))) == 2

    def test_plain_layout_rejected(self):
        with pytest.raises(CompileError):
            emit_prologue(layout_frame(parse(ONE_ARRAY).function("main"), gandalf=False))

    def test_header_values_in_memory(self):
        layout = FrameLayout(
            function="f",
            gandalf=True,
            blocks=[FrameBlock(name="a", kind=BlockKind.ARRAY, header_offset=0, data_offset=12, size=16)],
            frame_size=28,
        )
        program = AsmProgram(lines=emit_prologue(layout) + [AsmLine(instr=Instruction.halt())])
        simulator = Simulator(assemble(program, initial_sp=0x80012344))
        assert simulator.run().status == RunStatus.COMPLETED
        mem = simulator.state.mem
        assert mem.read_word(0x80012344) == 0x80012344
        assert mem.read_word(0x80012348) == 0x8001234F
        assert mem.read_word(0x8001234C) == 0x80012360
        assert not simulator.state.spr.phwe


class TestPhweBracket:
    """Header stores only while PHWE is set."""

    def test_corpus_is_well_bracketed(self, corpus_entries):
        for entry in corpus_entries:
            assert verify_phwe_bracketing(compile_source(entry.source, True)) == [], entry.name

    def test_header_store_after_bracket_is_flagged(self):
        asm = compile_source("int main() { return 7; }", True)
        lines = list(asm.lines)
        close = next(
            i for i, line in enumerate(lines)
            if line.instr is not None and line.instr == Instruction.mtspr(PHWE_BIT, 0)
        )
        lines.insert(close + 1, AsmLine(instr=Instruction.store(REG_SP, 0, REG_ZERO)))
        violations = verify_phwe_bracketing(asm.model_copy(update={"lines": lines}))
        assert len(violations) == 1
        assert "outside the PHWE bracket" in violations[0]

    def test_plain_build_has_no_spr_writes(self, corpus_entries):
        for entry in corpus_entries:
            ops = {instr.op for instr in compile_source(entry.source, False).instructions()}
            assert Opcode.MTSPR not in ops


class TestPointerInheritance:
    """Derived pointers carry their object's base."""

    def test_pointer_pair_in_memory(self):
        source = "int main() { int a[3]; int *p = &a[3]; return 0; }"
        asm = compile_source(source, True)
        layout = asm.layouts["main"]
        simulator = Simulator(assemble(asm))
        assert simulator.run().status == RunStatus.COMPLETED
        sp = INITIAL_SP - layout.frame_size
        pair = sp + layout.block("p").data_offset
        mem = simulator.state.mem
        assert mem.read_word(pair) == sp + layout.block("a").data_offset
        assert mem.read_word(pair + 4) == 12

    def test_arithmetic_escape_checked_against_origin(self, corpus_by_name):
        asm = compile_source(corpus_by_name["pointer_arith_escape"].source, True)
        outcome = run_image(assemble(asm))
        sp = INITIAL_SP - asm.layouts["main"].frame_size
        a_start = sp + asm.layouts["main"].block("a").data_offset
        assert outcome.trap_reason == "above-bound"
        assert outcome.trap.object_base == a_start
        assert outcome.trap.effective_address == a_start + 72

    def test_copied_pointer_keeps_origin(self, corpus_by_name):
        asm = compile_source(corpus_by_name["pointer_copy_escape"].source, True)
        outcome = run_image(assemble(asm))
        sp = INITIAL_SP - asm.layouts["main"].frame_size
        assert outcome.trap_reason == "above-bound"
        assert outcome.trap.object_base == sp + asm.layouts["main"].block("a").data_offset

    def test_in_bounds_dereference(self):
        source = "int main() { int a[2]; int *p = &a[0]; *p = 5; return a[0]; }"
        assert [o.final_exit_value for o in both_modes(source)] == [5, 5]

    def test_pointer_parameter(self):
        source = """
        int fill(int *p, int n) {
            int i = 0;
            while (i < n) { p[i] = i + 1; i = i + 1; }
            return 0;
        }
        int main() { int a[4]; fill(a, 4); return a[0] + a[3]; }
        """
        assert [o.final_exit_value for o in both_modes(source)] == [5, 5]

    def test_scalar_address(self):
        source = "int main() { int x = 2; int *p = &x; *p = 9; return x; }"
        assert [o.final_exit_value for o in both_modes(source)] == [9, 9]


class TestCompileErrors:
    """Type, scope and resource errors."""

    @pytest.mark.parametrize(
        "source",
        [
            "int main() { int a[2]; int *p = a; if (p < a) { return 1; } return 0; }",
            "int main() { int *p = 5; return 0; }",
            "int main() { return y; }",
            "int main() { int a[2]; a = 3; return 0; }",
            "int f() { return 1; }",
            "int main() { return g(1); }",
            "int f(int a) { return a; } int main() { return f(1, 2); }",
            "int main() { int x; int x; return 0; }",
        ],
    )
    def test_rejected(self, source):
        with pytest.raises(CompileError):
            compile_source(source, True)


class TestCodegen:
    """Generated code behaves like the source."""

    def test_load_const(self):
        for value in (0x12345678, -70000, 0x7FFF, -0x8000, 0x10000):
            lines = [AsmLine(instr=i) for i in load_const(REG_RETURN, value)]
            image = assemble(AsmProgram(lines=lines + [AsmLine(instr=Instruction.halt())]))
            assert run_image(image).final_exit_value == value & 0xFFFFFFFF
        assert len(load_const(12, 5)) == 1
        assert len(load_const(12, 0x10000)) == 2

    def test_spill_around_call(self):
        source = "int add(int a, int b) { return a + b; } int main() { int x = 1; return x + add(10, 10); }"
        assert [o.final_exit_value for o in both_modes(source)] == [21, 21]

    def test_exit_from_callee(self):
        source = "int f() { exit(9); return 0; } int main() { f(); return 1; }"
        assert [o.final_exit_value for o in both_modes(source)] == [9, 9]

    def test_block_shadowing(self):
        source = "int main() { int x = 1; { int x = 2; x = x + 1; } return x; }"
        assert [o.final_exit_value for o in both_modes(source)] == [1, 1]

    def test_comparisons(self):
        source = "int main() { return (3 < 4) + (4 <= 4) * 2 + (5 > 6) * 4 + (2 >= 3) * 8 + (1 == 1) * 16 + (1 != 1) * 32; }"
        assert both_modes(source)[0].final_exit_value == 1 + 2 + 16

    def test_recursion(self, corpus_by_name):
        entry = corpus_by_name["factorial"]
        assert [o.final_exit_value for o in both_modes(entry.source)] == [120, 120]


class TestCodeSize:
    """Static instruction counts of both build modes."""

    def test_zero_variable_program(self):
        asm = compile_source("int main() { return 7; }", True)
        assert asm.plain_count == 13
        assert asm.instrumented_count - asm.plain_count == boilerplate_count(1)

    def test_boilerplate_grows_per_function(self):
        asm = compile_source("int f() { return 1; } int main() { return f(); }", True)
        assert asm.instrumented_count - asm.plain_count == boilerplate_count(2)

    def test_counts_match_emitted_lines(self, corpus_by_name):
        source = corpus_by_name["array_sum"].source
        instrumented, plain = compile_source(source, True), compile_source(source, False)
        assert instrumented.instruction_count == instrumented.instrumented_count
        assert plain.instruction_count == plain.plain_count
        assert instrumented.size_bloat > 0


class TestAssemblyText:
    """Textual assembly and the assembler."""

    def test_text_round_trip(self, corpus_by_name):
        asm = compile_source(corpus_by_name["array_sum"].source, True)
        assert assemble(parse_asm(format_asm(asm))).words == assemble(asm).words

    def test_undefined_label(self):
        with pytest.raises(AssemblerError):
            assemble(parse_asm("jal nowhere"))

    def test_unknown_mnemonic(self):
        with pytest.raises(AssemblerError) as excinfo:
            parse_asm("halt\nfrob r1")
        assert excinfo.value.line == 2

    def test_duplicate_label(self):
        with pytest.raises(AssemblerError):
            assemble(parse_asm("x: halt\nx: halt"))

    def test_entry_label(self):
        image = assemble(parse_asm("halt\n_start: addi r11, r0, 4\nhalt"))
        assert image.entry_pc == 0x1004
        assert run_image(image).final_exit_value == 4
