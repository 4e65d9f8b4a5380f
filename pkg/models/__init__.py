"""
Pydantic models for machine state, compiler output and harness reports.
"""

from .isa import Instruction, Opcode, ProgramImage
from .machine import MachineState, SparseMemory, SprFlags, TrapKind, TrapRecord
from .guard import CheckResult, HeaderAddresses, MismatchReason, ProtectionHeader
from .memsys import AccessKind, CacheConfig, CostModel, MemStats
from .run import ProcessContext, RunOutcome, RunStatus, StepResult
from .frame import BlockKind, FrameBlock, FrameLayout
from .asm import AsmLine, AsmProgram, FunctionCounts
from .report import (
    BloatRow,
    BloatStats,
    CorpusEntry,
    EntryCategory,
    EntryResult,
    HeaderRegBenefit,
    OverheadRow,
    RunReport,
)

__all__ = [
    "Instruction",
    "Opcode",
    "ProgramImage",
    "MachineState",
    "SparseMemory",
    "SprFlags",
    "TrapKind",
    "TrapRecord",
    "CheckResult",
    "HeaderAddresses",
    "MismatchReason",
    "ProtectionHeader",
    "AccessKind",
    "CacheConfig",
    "CostModel",
    "MemStats",
    "ProcessContext",
    "RunOutcome",
    "RunStatus",
    "StepResult",
    "BlockKind",
    "FrameBlock",
    "FrameLayout",
    "AsmLine",
    "AsmProgram",
    "FunctionCounts",
    "BloatRow",
    "BloatStats",
    "CorpusEntry",
    "EntryCategory",
    "EntryResult",
    "HeaderRegBenefit",
    "OverheadRow",
    "RunReport",
]
