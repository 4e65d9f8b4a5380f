"""
Round-robin process scheduler with per-process GEB/PHWE save and restore.

All processes share one core: one SPR, one L1 cache, one store buffer and
one set of header registers. Each process owns its machine state and its
memory statistics.
"""

import logging
from collections import deque
from typing import Callable, Deque, Dict, List, Optional

from agents.simulator import Simulator
from models.isa import ProgramImage
from models.machine import MachineState, SprFlags
from models.memsys import CostModel
from models.run import ProcessContext, RunOutcome, RunStatus, StepResult
from tools.memsys_tools import MemorySystem
from utils.constants import DEFAULT_MAX_INSTRUCTIONS, REG_SP

# Setup logging
logger = logging.getLogger(__name__)

PreemptPredicate = Callable[[str, MachineState], bool]


class SchedulerError(Exception):
    """Invalid scheduler use."""
    pass


class ProcessScheduler:
    """Interleaves several simulated processes on one core."""

    def __init__(
        self,
        cost_model: Optional[CostModel] = None,
        quantum: int = 100,
        restore_flags: bool = True,
        preempt_after: Optional[PreemptPredicate] = None,
        max_instructions: int = DEFAULT_MAX_INSTRUCTIONS,
    ):
        if quantum < 1:
            raise SchedulerError("quantum must be at least one instruction")
        self.memsys = MemorySystem(cost_model)
        self.core_spr = SprFlags()
        self.quantum = quantum
        self.restore_flags = restore_flags
        self.preempt_after = preempt_after
        self.max_instructions = max_instructions
        self.contexts: List[ProcessContext] = []
        self._simulators: Dict[str, Simulator] = {}
        self._running: Optional[ProcessContext] = None
        self.switch_count = 0

    def add_process(self, name: str, image: ProgramImage, honor_geb: bool = True) -> ProcessContext:
        """Register a process that starts at the image's entry point."""
        if name in self._simulators:
            raise SchedulerError(f"duplicate process name: {name}")
        machine = MachineState(pc=image.entry_pc)
        machine.set_reg(REG_SP, image.initial_sp)
        machine.spr = self.core_spr
        context = ProcessContext(name=name, machine=machine)
        self._simulators[name] = Simulator(
            image,
            memsys=self.memsys,
            honor_geb=honor_geb,
            max_instructions=self.max_instructions,
            state=machine,
        )
        self.contexts.append(context)
        logger.debug(f"Added process {name}")
        return context

    def context_switch(self, incoming: ProcessContext) -> None:
        """
        Switch the core from the running process to ``incoming``.

        Saves the outgoing GEB/PHWE bits and restores the incoming ones
        (unless flag preservation is disabled), swaps memory statistics,
        drains the store buffer and invalidates the header registers.
        """
        outgoing = self._running
        if outgoing is incoming:
            return
        if outgoing is not None:
            if self.restore_flags:
                outgoing.saved_geb = self.core_spr.geb
                outgoing.saved_phwe = self.core_spr.phwe
            outgoing.mem_stats = self.memsys.swap_stats(incoming.mem_stats)
        else:
            self.memsys.swap_stats(incoming.mem_stats)
        self.memsys.context_switch()
        if self.restore_flags:
            self.core_spr.geb = incoming.saved_geb
            self.core_spr.phwe = incoming.saved_phwe
        incoming.switches += 1
        self._running = incoming
        self.switch_count += 1

    def _run_slice(self, context: ProcessContext) -> None:
        simulator = self._simulators[context.name]
        for _ in range(self.quantum):
            if context.machine.instructions >= self.max_instructions:
                context.outcome = simulator.outcome(
                    RunStatus.EXHAUSTED, f"instruction limit {self.max_instructions} reached"
                )
                return
            result = simulator.step()
            if result == StepResult.TRAPPED:
                context.outcome = simulator.outcome(RunStatus.TRAPPED, context.machine.trap.detail)
                logger.info(f"Process {context.name} trapped: {context.machine.trap.detail}")
                return
            if result == StepResult.HALTED:
                context.outcome = simulator.outcome(RunStatus.COMPLETED)
                return
            if self.preempt_after is not None and self.preempt_after(context.name, context.machine):
                return

    def run(self) -> Dict[str, RunOutcome]:
        """
        Round-robin all processes to completion.

        Returns:
            Outcome per process name
        """
        if not self.contexts:
            raise SchedulerError("no processes to run")
        ready: Deque[ProcessContext] = deque(self.contexts)
        while ready:
            context = ready.popleft()
            self.context_switch(context)
            self._run_slice(context)
            if not context.finished:
                ready.append(context)
        logger.info(f"Scheduler finished {len(self.contexts)} processes after {self.switch_count} switches")
        return {context.name: context.outcome for context in self.contexts}

    def get_stats(self) -> Dict[str, int]:
        return {
            "processes": len(self.contexts),
            "switches": self.switch_count,
            "finished": sum(1 for c in self.contexts if c.finished),
        }


def run_interleaved(
    images: Dict[str, ProgramImage],
    cost_model: Optional[CostModel] = None,
    quantum: int = 100,
    restore_flags: bool = True,
    preempt_after: Optional[PreemptPredicate] = None,
) -> Dict[str, RunOutcome]:
    """Convenience wrapper: schedule the named images together."""
    scheduler = ProcessScheduler(
        cost_model=cost_model,
        quantum=quantum,
        restore_flags=restore_flags,
        preempt_after=preempt_after,
    )
    for name, image in images.items():
        scheduler.add_process(name, image)
    return scheduler.run()
