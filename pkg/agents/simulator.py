"""
Fetch-decode-execute engine: machine state, protection unit and memory cost model wired together.
"""

import logging
from typing import Callable, Dict, List, Optional, Union

from models.guard import CheckResult
from models.isa import ALU_OPS, ALUI_OPS, BRANCH_OPS, Instruction, Opcode, ProgramImage
from models.machine import MachineState, TrapKind, TrapRecord
from models.memsys import AccessKind, CostModel
from models.run import RunOutcome, RunStatus, StepResult
from tools.guard_tools import (
    HeaderAlignmentError,
    check_access,
    derive_header_addresses,
    header_read_count,
)
from tools.isa_tools import (
    DecodeError,
    decode,
    effective_address,
    format_instruction,
    image_from_bytes,
    indexed_address,
)
from tools.memsys_tools import MemorySystem
from utils.constants import (
    DEFAULT_MAX_INSTRUCTIONS,
    GEB_BIT,
    REG_LINK,
    REG_RETURN,
    REG_SP,
    WORD_MASK,
)
from utils.logging_utils import hex_word, signed_word

# Setup logging
logger = logging.getLogger(__name__)

TraceSink = Callable[[str], None]
RetireHook = Callable[[MachineState, Instruction, int], None]


def _alu(op: Opcode, a: int, b: int) -> int:
    name = op.value.rstrip("i") if op in ALUI_OPS else op.value
    if name == "add":
        return a + b
    if name == "sub":
        return a - b
    if name == "and":
        return a & b
    if name == "or":
        return a | b
    if name == "shl":
        return a << (b & 31)
    return a * b


class Simulator:
    """Runs one program image on one machine state."""

    def __init__(
        self,
        image: ProgramImage,
        cost_model: Optional[CostModel] = None,
        memsys: Optional[MemorySystem] = None,
        trace: Optional[TraceSink] = None,
        honor_geb: bool = True,
        max_instructions: int = DEFAULT_MAX_INSTRUCTIONS,
        state: Optional[MachineState] = None,
    ):
        self.image = image
        self.memsys = memsys or MemorySystem(cost_model)
        self.cost_model = self.memsys.cost_model
        self.trace = trace
        self.honor_geb = honor_geb
        self.max_instructions = max_instructions
        self.retire_hooks: List[RetireHook] = []
        self._decoded: Dict[int, Union[Instruction, DecodeError]] = {}
        if state is None:
            state = MachineState(pc=image.entry_pc)
            state.set_reg(REG_SP, image.initial_sp)
        self.state = state

    @classmethod
    def from_bytes(cls, data: bytes, **kwargs) -> "Simulator":
        """Build a simulator from a binary image (raises ImageFormatError)."""
        return cls(image_from_bytes(data), **kwargs)

    def add_retire_hook(self, hook: RetireHook) -> None:
        """Call ``hook(state, instruction, pc)`` after every retired instruction."""
        self.retire_hooks.append(hook)

    def fetch(self, pc: int) -> Instruction:
        """
        Decode the instruction at ``pc``; code is not part of data memory.

        Raises:
            DecodeError: Outside the image, misaligned, or an invalid word
        """
        cached = self._decoded.get(pc)
        if cached is None:
            offset = pc - self.image.load_base
            if pc % 4 or offset < 0 or offset // 4 >= len(self.image.words):
                cached = DecodeError(f"fetch from {hex_word(pc)} outside the program image")
            else:
                try:
                    cached = decode(self.image.words[offset // 4])
                except DecodeError as e:
                    cached = e
            self._decoded[pc] = cached
        if isinstance(cached, DecodeError):
            raise cached
        return cached

    def _emit(self, line: str) -> None:
        if self.trace is not None:
            self.trace(line)

    def _trap(
        self,
        kind: TrapKind,
        ea: int,
        detail: str,
        result: Optional[CheckResult] = None,
        object_base: Optional[int] = None,
    ) -> StepResult:
        state = self.state
        header = {}
        if object_base is not None and object_base % 4 == 0:
            for addr in derive_header_addresses(object_base).as_tuple():
                header[hex_word(addr)] = state.mem.read_word(addr)
        state.trap = TrapRecord(
            kind=kind,
            pc=state.pc,
            effective_address=ea,
            detail=detail,
            reason=result.reason.value if result is not None and result.reason else None,
            object_base=object_base,
            header=header,
        )
        state.halted = True
        logger.debug(f"Trap {kind.value} at pc {hex_word(state.pc)}: {detail}")
        self._emit(f"trap {kind.value} pc={hex_word(state.pc)} ea={hex_word(ea)} {detail}")
        return StepResult.TRAPPED

    def _memory_access(self, instr: Instruction) -> Optional[StepResult]:
        """Route one load/store through the protection unit and the cost model."""
        state = self.state
        object_base = state.reg(instr.ra)
        if instr.op in (Opcode.LOADX, Opcode.STOREX):
            ea = indexed_address(object_base, state.reg(instr.rx))
        else:
            ea = effective_address(object_base, instr.imm)
        if ea % 4:
            return self._trap(TrapKind.ALIGNMENT_ERROR, ea, f"unaligned access at {hex_word(ea)}")

        try:
            result = check_access(state.mem, state.spr, object_base, ea)
        except HeaderAlignmentError as e:
            return self._trap(TrapKind.ALIGNMENT_ERROR, ea, str(e))

        memsys = self.memsys
        if result.checked:
            memsys.stats.checked_accesses += 1
            memsys.stats.header_address_generations += 3
            if memsys.header_regs.enabled:
                _, reads = memsys.header_lookup(object_base, state.mem)
            else:
                reads = header_read_count(result)
                memsys.charge_header_reads(object_base, reads)
            self._emit(
                f"check pc={hex_word(state.pc)} ea={hex_word(ea)} base={hex_word(object_base)} "
                f"reads={reads} {result}"
            )
        if not result.allowed:
            return self._trap(
                TrapKind.MISMATCH,
                ea,
                f"{result.reason.value} access to {hex_word(ea)} via object {hex_word(object_base)}",
                result=result,
                object_base=object_base,
            )

        if instr.is_store:
            value = state.reg(instr.rb)
            state.mem.write_word(ea, value)
            memsys.mem_access(AccessKind.DATA_WRITE, ea, value)
        else:
            state.set_reg(instr.rd, state.mem.read_word(ea))
            memsys.mem_access(AccessKind.DATA_READ, ea)
        return None

    def step(self) -> StepResult:
        """
        Execute one instruction.

        Returns:
            CONTINUE, HALTED, or TRAPPED; a faulting instruction still counts
            as executed
        """
        state = self.state
        if state.trap is not None:
            return StepResult.TRAPPED
        if state.halted:
            return StepResult.HALTED

        pc = state.pc
        mem_cycles_before = self.memsys.stats.total_mem_cycles
        state.instructions += 1
        try:
            instr = self.fetch(pc)
        except DecodeError as e:
            outcome = self._trap(TrapKind.DECODE_ERROR, pc, str(e))
            self._retire(mem_cycles_before)
            return outcome

        if self.trace is not None:
            self._emit(f"{hex_word(pc)}  {format_instruction(instr)}")

        next_pc = (pc + 4) & WORD_MASK
        op = instr.op
        outcome = StepResult.CONTINUE

        if op in ALU_OPS:
            state.set_reg(instr.rd, _alu(op, state.reg(instr.ra), state.reg(instr.rb)))
        elif op in ALUI_OPS:
            state.set_reg(instr.rd, _alu(op, state.reg(instr.ra), instr.imm))
        elif instr.is_memory:
            trapped = self._memory_access(instr)
            if trapped is not None:
                self._retire(mem_cycles_before)
                return trapped
        elif op == Opcode.MTSPR:
            if instr.imm == GEB_BIT:
                if self.honor_geb:
                    state.spr.geb = bool(instr.rb)
            else:
                state.spr.phwe = bool(instr.rb)
        elif op == Opcode.MFSPR:
            flag = state.spr.geb if instr.imm == GEB_BIT else state.spr.phwe
            state.set_reg(instr.rd, int(flag))
        elif op in BRANCH_OPS:
            a, b = state.reg(instr.ra), state.reg(instr.rb)
            if op == Opcode.BEQ:
                taken = a == b
            elif op == Opcode.BNE:
                taken = a != b
            else:
                taken = signed_word(a) < signed_word(b)
            if taken:
                next_pc = (pc + 4 * instr.imm) & WORD_MASK
        elif op == Opcode.JAL:
            state.set_reg(REG_LINK, next_pc)
            next_pc = instr.imm
        elif op == Opcode.JALR:
            next_pc = state.reg(instr.ra)
        else:
            state.halted = True
            outcome = StepResult.HALTED
            next_pc = pc

        state.pc = next_pc
        self._retire(mem_cycles_before)
        for hook in self.retire_hooks:
            hook(state, instr, pc)
        return outcome

    def _retire(self, mem_cycles_before: int) -> None:
        cycles = self.cost_model.base_cost + self.memsys.stats.total_mem_cycles - mem_cycles_before
        self.state.cycles += cycles
        self.memsys.advance(cycles)

    def run(self, max_instructions: Optional[int] = None) -> RunOutcome:
        """
        Step until halt, trap or the instruction limit.

        Args:
            max_instructions: Overrides the simulator's limit for this call

        Returns:
            RunOutcome; exhaustion is reported as its own status
        """
        limit = max_instructions if max_instructions is not None else self.max_instructions
        result = StepResult.CONTINUE
        while result == StepResult.CONTINUE:
            if self.state.instructions >= limit:
                logger.warning(f"Instruction limit {limit} reached at pc {hex_word(self.state.pc)}")
                return self.outcome(RunStatus.EXHAUSTED, f"instruction limit {limit} reached")
            result = self.step()
        if result == StepResult.TRAPPED:
            return self.outcome(RunStatus.TRAPPED, self.state.trap.detail)
        return self.outcome(RunStatus.COMPLETED)

    def outcome(self, status: RunStatus, detail: str = "") -> RunOutcome:
        """Snapshot the current counters into a RunOutcome."""
        state = self.state
        return RunOutcome(
            status=status,
            trap=state.trap,
            cycles=state.cycles,
            instructions=state.instructions,
            mem_stats=self.memsys.stats.model_copy(),
            final_exit_value=state.reg(REG_RETURN),
            detail=detail,
        )

    def get_stats(self) -> Dict[str, int]:
        return {
            "instructions": self.state.instructions,
            "cycles": self.state.cycles,
            "header_reads": self.memsys.stats.header_reads,
        }


def run_image(
    image: ProgramImage,
    cost_model: Optional[CostModel] = None,
    max_instructions: int = DEFAULT_MAX_INSTRUCTIONS,
    trace: Optional[TraceSink] = None,
    honor_geb: bool = True,
) -> RunOutcome:
    """Run an image to completion on a fresh machine."""
    simulator = Simulator(
        image,
        cost_model=cost_model,
        trace=trace,
        honor_geb=honor_geb,
        max_instructions=max_instructions,
    )
    return simulator.run()
