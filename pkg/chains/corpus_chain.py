"""
Corpus workflow: compile every entry in both build modes, run it under each
cost model, compare against the manifest and assemble the RunReport.
"""

import asyncio
import logging
from datetime import datetime
from typing import Dict, Iterable, List, Optional, Sequence

from agents.simulator import Simulator
from compiler import CompileError, assemble, compile_program, parse
from compiler.layout import SCALAR_BLOCK, SYSTEM_BLOCK
from models.asm import AsmProgram
from models.frame import FrameLayout
from models.isa import Instruction, Opcode, ProgramImage
from models.machine import MachineState
from models.memsys import CostModel
from models.report import (
    BloatRow,
    BloatStats,
    CorpusEntry,
    EntryCategory,
    EntryResult,
    HeaderRegBenefit,
    OverheadRow,
    RunReport,
    WithoutVerdict,
    WithVerdict,
)
from models.run import RunOutcome, RunStatus
from tools.guard_tools import derive_header_addresses, header_fields_for, read_header
from utils.constants import (
    DEFAULT_MAX_INSTRUCTIONS,
    DEFAULT_SWEEP_CACHE_SIZES,
    PHWE_BIT,
    REG_SP,
    TIGHT_LOOP_ENTRY,
    WORD_MASK,
)
from utils.error_utils import create_result_dict, expect_equal, handle_step_error

# Setup logging
logger = logging.getLogger(__name__)


class CorpusChainError(Exception):
    """Base corpus chain error."""
    pass


class BuiltEntry:
    """Both compiled variants of one corpus entry."""

    def __init__(self, entry: CorpusEntry, instrumented: AsmProgram, plain: AsmProgram):
        self.entry = entry
        self.instrumented = instrumented
        self.plain = plain
        self.instrumented_image = assemble(instrumented)
        self.plain_image = assemble(plain)


def build_entry(entry: CorpusEntry) -> BuiltEntry:
    """
    Compile an entry in both modes.

    Raises:
        CompileError: The entry does not compile (a suite error)
    """
    program = parse(entry.source)
    return BuiltEntry(entry, compile_program(program, True), compile_program(program, False))


class HeaderSweep:
    """
    Retire hook checking every header of the current frame right after the
    prologue closes its PHWE bracket.
    """

    def __init__(self, image: ProgramImage, layouts: Dict[str, FrameLayout]):
        self.image = image
        self.layouts = layouts
        self.blocks_checked = 0
        self.blocks_well_formed = 0
        self.malformed: List[str] = []

    def __call__(self, state: MachineState, instr: Instruction, pc: int) -> None:
        if instr.op != Opcode.MTSPR or instr.imm != PHWE_BIT or instr.rb != 0:
            return
        function = self.image.function_at(pc)
        layout = self.layouts.get(function)
        if layout is None:
            return
        sp = state.reg(REG_SP)
        for block in layout.headered_blocks:
            data_start = (sp + block.data_offset) & WORD_MASK
            self.blocks_checked += 1
            stored = read_header(state.mem, data_start)
            magic_addr = derive_header_addresses(data_start).magic_addr
            if stored.is_well_formed(magic_addr) and stored == header_fields_for(data_start, block.size):
                self.blocks_well_formed += 1
            else:
                self.malformed.append(f"{function}:{block.name}")


def run_variant(
    image: ProgramImage,
    cost_model: CostModel,
    max_instructions: int = DEFAULT_MAX_INSTRUCTIONS,
    sweep: Optional[HeaderSweep] = None,
    honor_geb: bool = True,
) -> RunOutcome:
    simulator = Simulator(image, cost_model=cost_model, max_instructions=max_instructions, honor_geb=honor_geb)
    if sweep is not None:
        simulator.add_retire_hook(sweep)
    return simulator.run()


def judge(entry: CorpusEntry, with_outcome: RunOutcome, without_outcome: RunOutcome) -> List[str]:
    """Compare both-mode outcomes against the entry's manifest; returns failures."""
    failures: List[str] = []
    label = entry.name

    if entry.expected_with == WithVerdict.TRAPPED:
        if expect_equal(f"{label} with GANDALF status", RunStatus.TRAPPED.value, with_outcome.status.value, failures, logger):
            expect_equal(f"{label} with GANDALF reason", entry.expected_reason, with_outcome.trap_reason, failures, logger)
    else:
        if expect_equal(f"{label} with GANDALF status", RunStatus.COMPLETED.value, with_outcome.status.value, failures, logger):
            expect_equal(f"{label} with GANDALF exit", entry.expected_exit, with_outcome.final_exit_value, failures, logger)

    # Without GANDALF nothing may trap: exploits complete with the sentinel flipped
    if expect_equal(f"{label} without GANDALF status", RunStatus.COMPLETED.value, without_outcome.status.value, failures, logger):
        expected_plain = entry.without_exit
        if expected_plain is None and entry.expected_with == WithVerdict.COMPLETED:
            expected_plain = entry.expected_exit
        if expected_plain is not None:
            expect_equal(f"{label} without GANDALF exit", expected_plain, without_outcome.final_exit_value, failures, logger)
        if entry.expected_without == WithoutVerdict.CORRUPTED and without_outcome.final_exit_value == entry.clean_exit:
            handle_step_error(f"{label}: plain run was not corrupted", failures, logger)
    return failures


def evaluate_entry(
    built: BuiltEntry,
    cost_model: CostModel,
    max_instructions: int = DEFAULT_MAX_INSTRUCTIONS,
) -> EntryResult:
    """Run one built entry in both modes under one cost model."""
    entry = built.entry
    sweep = HeaderSweep(built.instrumented_image, built.instrumented.layouts)
    with_outcome = run_variant(built.instrumented_image, cost_model, max_instructions, sweep)
    without_outcome = run_variant(built.plain_image, cost_model, max_instructions)

    failures = judge(entry, with_outcome, without_outcome)
    for block in sweep.malformed:
        handle_step_error(f"{entry.name}: malformed header after prologue in {block}", failures, logger)

    overhead = None
    if with_outcome.status == RunStatus.COMPLETED and without_outcome.status == RunStatus.COMPLETED and without_outcome.cycles:
        overhead = with_outcome.cycles / without_outcome.cycles

    return EntryResult(
        name=entry.name,
        category=entry.category,
        cost_model=cost_model.name,
        with_gandalf=with_outcome,
        without_gandalf=without_outcome,
        passed=not failures,
        failures=failures,
        instrumented_instructions=built.instrumented.instrumented_count,
        plain_instructions=built.instrumented.plain_count,
        size_bloat=built.instrumented.size_bloat,
        cycle_overhead=overhead,
        header_blocks_checked=sweep.blocks_checked,
        header_blocks_well_formed=sweep.blocks_well_formed,
    )


def build_all(entries: Iterable[CorpusEntry], errors: List[str]) -> List[BuiltEntry]:
    """Compile every entry; compile failures are recorded as suite errors."""
    built: List[BuiltEntry] = []
    for entry in entries:
        try:
            built.append(build_entry(entry))
        except CompileError as e:
            handle_step_error(f"{entry.name}: does not compile: {e}", errors, logger)
    return built


async def run_corpus(
    entries: Sequence[CorpusEntry],
    cost_models: Optional[Sequence[CostModel]] = None,
    max_instructions: int = DEFAULT_MAX_INSTRUCTIONS,
    workers: int = 4,
) -> RunReport:
    """
    Execute every entry in both modes under each cost model.

    Entries are simulated concurrently in worker threads, one simulator
    per entry; results keep corpus order so reports are reproducible.

    Args:
        entries: Corpus entries
        cost_models: Cost models to run under (default cost model when omitted)
        max_instructions: Per-run instruction limit
        workers: Concurrent simulations

    Returns:
        RunReport with entry results and bloat statistics
    """
    models = list(cost_models or [CostModel()])
    names = [m.name for m in models]
    if len(set(names)) != len(names):
        models = [m.model_copy(update={"name": f"{m.name}-{i}"}) for i, m in enumerate(models)]

    logger.info(f"Running {len(entries)} corpus entries under {len(models)} cost model(s)")
    start_time = datetime.utcnow()
    suite_errors: List[str] = []
    built = build_all(entries, suite_errors)

    semaphore = asyncio.Semaphore(workers)

    async def evaluate(item: BuiltEntry, model: CostModel) -> EntryResult:
        async with semaphore:
            return await asyncio.to_thread(evaluate_entry, item, model, max_instructions)

    results = await asyncio.gather(*(evaluate(item, model) for model in models for item in built))

    report = RunReport(
        cost_models=models,
        entries=list(results),
        bloat=bloat_from_built(built),
        suite_errors=suite_errors,
    )
    execution_time = (datetime.utcnow() - start_time).total_seconds()
    logger.info(
        f"Corpus finished: {'PASS' if report.passed else 'FAIL'} - "
        f"{sum(1 for r in results if r.passed)}/{len(results)} results passed in {execution_time:.2f}s"
    )
    return report


def count_variables(asm: AsmProgram) -> int:
    """Parameters and declared variables across all functions (spill slots excluded)."""
    total = 0
    for layout in asm.layouts.values():
        for block in layout.blocks:
            if block.name == SYSTEM_BLOCK:
                continue
            if block.name == SCALAR_BLOCK:
                total += sum(1 for slot in block.slots if not slot.startswith("$"))
            else:
                total += 1
    return total


def bloat_from_built(built: Sequence[BuiltEntry]) -> BloatStats:
    rows = [
        BloatRow(
            entry=b.entry.name,
            variables=count_variables(b.instrumented),
            instrumented=b.instrumented.instrumented_count,
            plain=b.instrumented.plain_count,
            bloat=b.instrumented.size_bloat,
        )
        for b in built
    ]
    return BloatStats.from_rows(rows)


def measure_bloat(entries: Sequence[CorpusEntry]) -> BloatStats:
    """
    Static-instruction bloat per entry and in aggregate.

    Raises:
        CorpusChainError: If any entry fails to compile
    """
    errors: List[str] = []
    built = build_all(entries, errors)
    if errors:
        raise CorpusChainError("; ".join(errors))
    stats = bloat_from_built(built)
    logger.info(
        f"Bloat over {len(stats.rows)} entries: median {stats.median_bloat:.1%}, mean {stats.mean_bloat:.1%} "
        f"(reference figure {stats.reference_ratio:.0%})"
    )
    return stats


def sweep_cost_model(base: CostModel, cache_size: int, headerregs: bool) -> CostModel:
    """Cost model for one sweep point; cache size 0 disables the cache."""
    cache = base.cache.model_copy(update={"enabled": False} if cache_size == 0 else {"total_size": cache_size})
    if cache_size and cache_size < cache.line_size:
        cache = cache.model_copy(update={"line_size": cache_size})
    return base.model_copy(update={
        "name": f"cache{cache_size}-hr{'on' if headerregs else 'off'}",
        "cache": cache,
        "headerregs_enabled": headerregs,
    })


def measure_overheads(
    entries: Sequence[CorpusEntry],
    cache_sizes: Sequence[int] = DEFAULT_SWEEP_CACHE_SIZES,
    headerregs: Sequence[bool] = (False, True),
    base: Optional[CostModel] = None,
    max_instructions: int = DEFAULT_MAX_INSTRUCTIONS,
) -> List[OverheadRow]:
    """
    Cycle overhead of the benign entries over a cache-size x header-register sweep.

    Exploit entries are skipped.

    Returns:
        One OverheadRow per (entry, cache size, header registers) point
    """
    base = base or CostModel()
    errors: List[str] = []
    built = build_all([e for e in entries if e.category == EntryCategory.BENIGN], errors)
    if errors:
        raise CorpusChainError("; ".join(errors))

    rows: List[OverheadRow] = []
    for item in built:
        for size in cache_sizes:
            for regs in headerregs:
                model = sweep_cost_model(base, size, regs)
                gandalf = run_variant(item.instrumented_image, model, max_instructions)
                plain = run_variant(item.plain_image, model, max_instructions)
                rows.append(OverheadRow(
                    entry=item.entry.name,
                    cache_size=size,
                    headerregs=regs,
                    plain_cycles=plain.cycles,
                    gandalf_cycles=gandalf.cycles,
                    ratio=gandalf.cycles / plain.cycles if plain.cycles else 0.0,
                    header_reads=gandalf.mem_stats.header_reads,
                    plain_header_reads=plain.mem_stats.header_reads,
                    checked_accesses=gandalf.mem_stats.checked_accesses,
                    header_reg_hits=gandalf.mem_stats.header_reg_hits,
                    gandalf_hit_rate=gandalf.mem_stats.hit_rate,
                    plain_hit_rate=plain.mem_stats.hit_rate,
                ))
    logger.info(f"Measured {len(rows)} overhead points over {len(built)} benign entries")
    return rows


def locality_violations(rows: Sequence[OverheadRow]) -> List[str]:
    """
    Points where enabling the cache raised the overhead ratio above the
    cache-disabled figure.

    Only points with header registers disabled are compared.
    """
    disabled: Dict[str, float] = {
        r.entry: r.ratio for r in rows if r.cache_size == 0 and not r.headerregs
    }
    violations = []
    for r in rows:
        if r.headerregs:
            continue
        reference = disabled.get(r.entry)
        if r.cache_size and reference is not None and r.ratio > reference:
            violations.append(
                f"{r.entry}: ratio {r.ratio:.4f} with a {r.cache_size}-byte cache exceeds {reference:.4f} without"
            )
    return violations


def measure_header_reg_benefit(
    entry: CorpusEntry,
    base: Optional[CostModel] = None,
    max_instructions: int = DEFAULT_MAX_INSTRUCTIONS,
) -> HeaderRegBenefit:
    """Header reads of one entry's instrumented build with header registers off and on."""
    base = base or CostModel()
    built = build_entry(entry)
    off = run_variant(built.instrumented_image, base.model_copy(update={"headerregs_enabled": False}), max_instructions)
    on = run_variant(built.instrumented_image, base.model_copy(update={"headerregs_enabled": True}), max_instructions)
    benefit = HeaderRegBenefit(
        entry=entry.name,
        header_reads_off=off.mem_stats.header_reads,
        header_reads_on=on.mem_stats.header_reads,
    )
    logger.info(
        f"Header registers on {entry.name}: {benefit.header_reads_off} -> {benefit.header_reads_on} "
        f"header reads ({benefit.reduction:.1%} fewer)"
    )
    return benefit


async def run_bench(
    entries: Sequence[CorpusEntry],
    base: Optional[CostModel] = None,
    sweep: bool = False,
    max_instructions: int = DEFAULT_MAX_INSTRUCTIONS,
    tight_loop_entry: str = TIGHT_LOOP_ENTRY,
) -> RunReport:
    """
    Overhead report: benign runs under the base cost model, bloat, the
    header-register benefit and, with ``sweep``, the full cache sweep.
    """
    base = base or CostModel()
    benign = [e for e in entries if e.category == EntryCategory.BENIGN]
    report = await run_corpus(benign, [base], max_instructions)

    sizes = DEFAULT_SWEEP_CACHE_SIZES if sweep else (0, base.cache.total_size)
    report.overheads = await asyncio.to_thread(
        measure_overheads, benign, sizes, (False, True), base, max_instructions
    )
    report.cost_models.extend(
        sweep_cost_model(base, size, regs) for size in sizes for regs in (False, True)
    )
    report.bloat = await asyncio.to_thread(measure_bloat, entries)
    for violation in locality_violations(report.overheads):
        handle_step_error(violation, report.suite_errors, logger)

    tight = next((e for e in entries if e.name == tight_loop_entry), None)
    if tight is None:
        logger.warning(f"Corpus has no {tight_loop_entry} entry; skipping the header-register benefit")
    else:
        report.header_reg_benefit = measure_header_reg_benefit(tight, base, max_instructions)
        if not report.header_reg_benefit.passed:
            handle_step_error(
                f"header registers cut header reads by {report.header_reg_benefit.reduction:.1%}, "
                f"below {report.header_reg_benefit.threshold:.0%}",
                report.suite_errors,
                logger,
            )
    return report


def corpus_result(report: RunReport) -> Dict[str, object]:
    """Result dictionary in the harness's common shape."""
    errors = list(report.suite_errors)
    for e in report.entries:
        errors.extend(e.failures)
    return create_result_dict(report.passed, errors, **report.summary())
