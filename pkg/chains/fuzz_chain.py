"""
Differential fuzzing: random in-bounds mini-G programs must behave the same
with the protection unit connected, disconnected, and without instrumentation.
"""

import logging
import random
from datetime import datetime
from typing import Any, Dict, List, Optional

from agents.simulator import Simulator
from compiler import CompileError, assemble, compile_program, parse
from models.memsys import CostModel
from models.run import RunStatus
from utils.error_utils import create_result_dict, handle_step_error

# Setup logging
logger = logging.getLogger(__name__)

ARRAY_SIZES = (4, 8, 16)
BINARY_OPS = ("+", "-", "*", "&", "|")
COMPARE_OPS = ("<", ">", "<=", ">=", "==", "!=")
FUZZ_MAX_INSTRUCTIONS = 200_000


class ProgramGenerator:
    """
    Random benign mini-G programs.

    In bounds by construction: every array has the same power-of-two size
    and every subscript is masked with ``size - 1``; loops count a
    dedicated variable up to a small constant; all storage is initialized
    before it is read.
    """

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.size = rng.choice(ARRAY_SIZES)
        self.mask = self.size - 1
        self.helpers: List[str] = []
        self._loop_counter = 0

    # Expressions

    def _index(self, scalars: List[str], arrays: List[str], depth: int) -> str:
        return f"({self.expr(scalars, arrays, depth + 1)}) & {self.mask}"

    def expr(self, scalars: List[str], arrays: List[str], depth: int = 0) -> str:
        rng = self.rng
        if depth >= 3 or rng.random() < 0.3:
            choice = rng.random()
            if choice < 0.35 or not (scalars or arrays):
                return str(rng.randint(0, 100))
            if choice < 0.75 and scalars:
                return rng.choice(scalars)
            if arrays:
                return f"{rng.choice(arrays)}[{self._index(scalars, arrays, depth)}]"
            return rng.choice(scalars)
        kind = rng.random()
        left = self.expr(scalars, arrays, depth + 1)
        if kind < 0.6:
            right = self.expr(scalars, arrays, depth + 1)
            return f"({left} {rng.choice(BINARY_OPS)} {right})"
        if kind < 0.75:
            return f"({left} << {rng.randint(0, 3)})"
        if kind < 0.9:
            right = self.expr(scalars, arrays, depth + 1)
            return f"({left} {rng.choice(COMPARE_OPS)} {right})"
        return f"(-{left})"

    # Statements

    def statements(
        self,
        scalars: List[str],
        arrays: List[str],
        counters: List[str],
        count: int,
        depth: int,
        indent: str,
    ) -> List[str]:
        rng = self.rng
        out: List[str] = []
        for _ in range(count):
            roll = rng.random()
            if roll < 0.35 and scalars:
                out.append(f"{indent}{rng.choice(scalars)} = {self.expr(scalars, arrays)};")
            elif roll < 0.6 and arrays:
                target = f"{rng.choice(arrays)}[{self._index(scalars, arrays, 1)}]"
                out.append(f"{indent}{target} = {self.expr(scalars, arrays)};")
            elif roll < 0.75 and depth < 2:
                out.append(f"{indent}if ({self.expr(scalars, arrays, 1)}) {{")
                out.extend(self.statements(scalars, arrays, counters, rng.randint(1, 2), depth + 1, indent + "    "))
                if rng.random() < 0.5:
                    out.append(f"{indent}}} else {{")
                    out.extend(self.statements(scalars, arrays, counters, rng.randint(1, 2), depth + 1, indent + "    "))
                out.append(f"{indent}}}")
            elif roll < 0.87 and depth < 2 and counters:
                counter = counters[0]
                out.append(f"{indent}{counter} = 0;")
                out.append(f"{indent}while ({counter} < {rng.randint(1, 5)}) {{")
                out.extend(self.statements(scalars, arrays, counters[1:], rng.randint(1, 3), depth + 1, indent + "    "))
                out.append(f"{indent}    {counter} = {counter} + 1;")
                out.append(f"{indent}}}")
            elif self.helpers and arrays and scalars:
                helper = rng.choice(self.helpers)
                out.append(
                    f"{indent}{rng.choice(scalars)} = {helper}({rng.choice(arrays)}, {self.expr(scalars, arrays, 1)});"
                )
            elif scalars:
                out.append(f"{indent}{rng.choice(scalars)} = {self.expr(scalars, arrays)};")
        return out

    # Functions

    def helper(self, name: str) -> List[str]:
        scalars = ["x", "t"]
        counters = ["hc0"]
        lines = [f"int {name}(int *p, int x) {{", f"    int t = {self.expr(['x'], ['p'])};", "    int hc0 = 0;"]
        lines.extend(self.statements(scalars, ["p"], counters, self.rng.randint(1, 3), 1, "    "))
        lines.append(f"    return {self.expr(scalars, ['p'])};")
        lines.append("}")
        return lines

    def generate(self) -> str:
        """One complete program text."""
        rng = self.rng
        lines: List[str] = []
        for h in range(rng.randint(0, 2)):
            name = f"helper{h}"
            lines.extend(self.helper(name))
            lines.append("")
            self.helpers.append(name)

        arrays = [f"arr{k}" for k in range(rng.randint(1, 2))]
        scalars = [f"v{k}" for k in range(rng.randint(2, 4))]
        counters = ["c0", "c1"]
        lines.append("int main() {")
        for a in arrays:
            lines.append(f"    int {a}[{self.size}];")
        for s in scalars:
            lines.append(f"    int {s} = {rng.randint(-50, 50)};")
        for c in counters:
            lines.append(f"    int {c} = 0;")
        for a in arrays:
            lines.append("    c0 = 0;")
            lines.append(f"    while (c0 < {self.size}) {{")
            lines.append(f"        {a}[c0] = c0 * {rng.randint(1, 9)} + {rng.randint(0, 20)};")
            lines.append("        c0 = c0 + 1;")
            lines.append("    }")
        lines.extend(self.statements(scalars, arrays, counters, rng.randint(3, 8), 0, "    "))
        lines.append(f"    return {self.expr(scalars, arrays)};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def generate_program(seed: int) -> str:
    """Deterministic program for a seed."""
    return ProgramGenerator(random.Random(seed)).generate()


class FuzzChain:
    """Runs the three-way differential check over many generated programs."""

    def __init__(
        self,
        cost_model: Optional[CostModel] = None,
        max_instructions: int = FUZZ_MAX_INSTRUCTIONS,
    ):
        self.cost_model = cost_model or CostModel()
        self.max_instructions = max_instructions
        self.programs_checked = 0
        self.divergences = 0

    def _simulate(self, image, honor_geb: bool = True) -> Simulator:
        simulator = Simulator(
            image,
            cost_model=self.cost_model,
            honor_geb=honor_geb,
            max_instructions=self.max_instructions,
        )
        simulator.run()
        return simulator

    def check_program(self, source: str, label: str = "program") -> List[str]:
        """
        Differential check of one program.

        Returns:
            Divergence descriptions (empty when all three runs agree)
        """
        errors: List[str] = []
        try:
            program = parse(source)
            instrumented = assemble(compile_program(program, True))
            plain = assemble(compile_program(program, False))
        except CompileError as e:
            handle_step_error(f"{label}: generated program does not compile: {e}", errors, logger)
            return errors

        checked = self._simulate(instrumented, honor_geb=True)
        masked = self._simulate(instrumented, honor_geb=False)
        baseline = self._simulate(plain)

        checked_outcome = checked.outcome(RunStatus.COMPLETED)
        if checked.state.trap is not None or not checked.state.halted:
            detail = checked.state.trap.detail if checked.state.trap else "did not halt"
            handle_step_error(f"{label}: instrumented run did not complete: {detail}", errors, logger)
            return errors
        if checked.state.snapshot() != masked.state.snapshot():
            handle_step_error(f"{label}: architectural state differs with the check unit disconnected", errors, logger)
        if not baseline.state.halted or baseline.state.trap is not None:
            handle_step_error(f"{label}: plain build did not complete", errors, logger)
        elif baseline.outcome(RunStatus.COMPLETED).final_exit_value != checked_outcome.final_exit_value:
            handle_step_error(
                f"{label}: exit value {checked_outcome.final_exit_value} instrumented vs "
                f"{baseline.outcome(RunStatus.COMPLETED).final_exit_value} plain",
                errors,
                logger,
            )
        return errors

    def run(self, count: int = 1000, seed: int = 0) -> Dict[str, Any]:
        """
        Generate and check ``count`` programs from ``seed``.

        Returns:
            Result dictionary with success flag, errors and counts
        """
        logger.info(f"Fuzzing {count} programs from seed {seed}")
        start_time = datetime.utcnow()
        rng = random.Random(seed)
        errors: List[str] = []
        failing_seeds: List[int] = []
        for _ in range(count):
            program_seed = rng.getrandbits(32)
            found = self.check_program(generate_program(program_seed), label=f"seed {program_seed}")
            self.programs_checked += 1
            if found:
                self.divergences += 1
                failing_seeds.append(program_seed)
                errors.extend(found)

        execution_time = (datetime.utcnow() - start_time).total_seconds()
        logger.info(
            f"Fuzzing finished: {self.divergences} divergent programs out of {count} in {execution_time:.2f}s"
        )
        return create_result_dict(
            not errors,
            errors,
            programs=count,
            divergences=len(failing_seeds),
            failing_seeds=failing_seeds,
            seed=seed,
        )
