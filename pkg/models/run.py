"""
Run outcome models produced by the simulator and the process scheduler.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from models.machine import MachineState, TrapRecord
from models.memsys import MemStats


class StepResult(str, Enum):
    """Outcome of executing a single instruction."""
    CONTINUE = "continue"
    HALTED = "halted"
    TRAPPED = "trapped"


class RunStatus(str, Enum):
    """Final status of a run."""
    COMPLETED = "completed"
    TRAPPED = "trapped"
    EXHAUSTED = "exhausted"


class RunOutcome(BaseModel):
    """Per-program outcome record."""

    status: RunStatus
    trap: Optional[TrapRecord] = None
    cycles: int = 0
    instructions: int = 0
    mem_stats: MemStats = Field(default_factory=MemStats)
    final_exit_value: int = 0
    detail: str = ""

    @property
    def trap_reason(self) -> Optional[str]:
        """Mismatch reason, or the trap kind for other traps."""
        if self.trap is None:
            return None
        return self.trap.reason or self.trap.kind.value


class ProcessContext(BaseModel):
    """One schedulable process: its machine plus the GEB/PHWE bits saved at switch-out."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    machine: MachineState
    saved_geb: bool = False
    saved_phwe: bool = False
    mem_stats: MemStats = Field(default_factory=MemStats)
    switches: int = 0
    outcome: Optional[RunOutcome] = None

    @property
    def finished(self) -> bool:
        return self.outcome is not None
