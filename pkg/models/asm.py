"""
Assembly program models: symbolic instruction lists plus compile metadata.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from models.frame import FrameLayout
from models.isa import Instruction


class AsmLine(BaseModel):
    """A label definition, an instruction, or both."""

    label: Optional[str] = None
    instr: Optional[Instruction] = None
    target: Optional[str] = Field(None, description="Symbolic branch/jump target")
    comment: str = ""

    @property
    def is_instruction(self) -> bool:
        return self.instr is not None


class FunctionCounts(BaseModel):
    """Static instruction counts of one function in both build modes."""

    instrumented: int = 0
    plain: int = 0


class AsmProgram(BaseModel):
    """Ordered instruction list with symbolic labels and per-function metadata."""

    lines: List[AsmLine] = Field(default_factory=list)
    gandalf: bool = False
    function_counts: Dict[str, FunctionCounts] = Field(default_factory=dict)
    stub_counts: FunctionCounts = Field(default_factory=FunctionCounts)
    layouts: Dict[str, FrameLayout] = Field(default_factory=dict)

    @property
    def instruction_count(self) -> int:
        return sum(1 for line in self.lines if line.is_instruction)

    @property
    def instrumented_count(self) -> int:
        return self.stub_counts.instrumented + sum(c.instrumented for c in self.function_counts.values())

    @property
    def plain_count(self) -> int:
        return self.stub_counts.plain + sum(c.plain for c in self.function_counts.values())

    @property
    def size_bloat(self) -> float:
        """instrumented / plain - 1 over the whole program."""
        return self.instrumented_count / self.plain_count - 1 if self.plain_count else 0.0

    def instructions(self) -> List[Instruction]:
        return [line.instr for line in self.lines if line.instr is not None]
