"""
CLI interface for the GANDALF simulator, compiler and harness.
"""

import asyncio
import argparse
import json
import sys
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from agents.simulator import Simulator
from chains.corpus_chain import CorpusChainError, corpus_result, run_bench, run_corpus
from chains.fuzz_chain import FuzzChain
from compiler import CompileError, assemble, compile_program, format_asm, parse, parse_asm
from config.cost_config import ConfigError
from config.settings import Settings, get_settings
from models.memsys import CostModel
from models.report import RunReport
from models.run import RunOutcome, RunStatus
from storage.corpus_store import CorpusError, load_corpus
from storage.report_store import save_report_csv, save_report_json
from tools.isa_tools import IsaError, image_from_bytes, image_to_bytes
from utils.constants import EXIT_EXPECTATION, EXIT_OK, EXIT_TRAPPED, EXIT_USAGE
from utils.logging_utils import hex_word

# Setup logging
logger = logging.getLogger(__name__)


def print_success(message: str) -> None:
    """Print success message."""
    print(f"[SUCCESS] {message}")


def print_error(message: str) -> None:
    """Print error message."""
    print(f"[ERROR] {message}")


def print_info(message: str) -> None:
    """Print info message."""
    print(f"[INFO] {message}")


def print_warning(message: str) -> None:
    """Print warning message."""
    print(f"[WARNING] {message}")


def cost_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Cost-config keys set by CLI flags."""
    overrides: Dict[str, Any] = {}
    cache = getattr(args, "cache", None)
    if cache is not None:
        if cache == 0:
            overrides["cache.enabled"] = False
        else:
            overrides["cache.size"] = cache
            overrides["cache.enabled"] = True
    if getattr(args, "headerregs", False):
        overrides["headerregs.enabled"] = True
    return overrides


def resolve_cost_model(settings: Settings, args: argparse.Namespace) -> CostModel:
    if getattr(args, "cost_config", None):
        settings = settings.model_copy(update={"cost_config": args.cost_config})
    return settings.cost_model(cost_overrides(args))


def print_outcome(outcome: RunOutcome) -> None:
    stats = outcome.mem_stats
    print_info(f"Status: {outcome.status.value}")
    print_info(f"Exit value: {outcome.final_exit_value}")
    print_info(f"Instructions: {outcome.instructions}")
    print_info(f"Cycles: {outcome.cycles}")
    print_info(
        f"Memory: {stats.data_reads} reads, {stats.data_writes} writes, {stats.header_reads} header reads, "
        f"{stats.checked_accesses} checked, hit rate {stats.hit_rate:.1%}, "
        f"{stats.header_reg_hits} header-register hits, {stats.store_stall_cycles} store stall cycles"
    )


def print_trap(outcome: RunOutcome) -> None:
    trap = outcome.trap
    print_error(
        f"Trap {trap.kind.value} at pc {hex_word(trap.pc)}, EA {hex_word(trap.effective_address)}"
        + (f", reason {trap.reason}" if trap.reason else "")
    )
    if trap.object_base is not None:
        print_info(f"Object base {hex_word(trap.object_base)}")
    for address, value in trap.header.items():
        print_info(f"  header word {address} = {hex_word(value)}")


async def compile_command(args: argparse.Namespace) -> int:
    """Compile a mini-G source file to an image."""
    source_path = Path(args.source)
    try:
        source = source_path.read_text(encoding="utf-8")
    except OSError as e:
        print_error(f"Cannot read {source_path}: {e}")
        return EXIT_USAGE

    try:
        asm = compile_program(parse(source), args.gandalf)
        image = assemble(asm)
    except CompileError as e:
        print_error(f"{source_path}: {e}")
        return EXIT_USAGE

    if args.emit_asm:
        print(format_asm(asm), end="")
    if args.dump_layout:
        print(json.dumps({name: layout.dump() for name, layout in asm.layouts.items()}, indent=2))

    output = Path(args.output) if args.output else source_path.with_suffix(".img")
    output.write_bytes(image_to_bytes(image))
    mode = "instrumented" if args.gandalf else "plain"
    print_success(
        f"Wrote {mode} image {output} ({len(image.words)} words; "
        f"{asm.instrumented_count} instrumented / {asm.plain_count} plain instructions, "
        f"bloat {asm.size_bloat:.1%})"
    )
    return EXIT_OK


async def run_command(args: argparse.Namespace, settings: Settings) -> int:
    """Run an image or an assembly file."""
    path = Path(args.image)
    try:
        if path.suffix == ".s":
            image = assemble(parse_asm(path.read_text(encoding="utf-8")))
        else:
            image = image_from_bytes(path.read_bytes())
    except OSError as e:
        print_error(f"Cannot read {path}: {e}")
        return EXIT_USAGE
    except (CompileError, IsaError) as e:
        print_error(f"{path}: {e}")
        return EXIT_USAGE

    cost_model = resolve_cost_model(settings, args)
    simulator = Simulator(
        image,
        cost_model=cost_model,
        trace=print if args.trace else None,
        max_instructions=settings.max_instructions if args.max_insns is None else args.max_insns,
    )
    outcome = await asyncio.to_thread(simulator.run)
    print_outcome(outcome)
    if outcome.status == RunStatus.TRAPPED:
        print_trap(outcome)
        return EXIT_TRAPPED
    if outcome.status == RunStatus.EXHAUSTED:
        print_warning(outcome.detail)
        return EXIT_TRAPPED
    print_success("Program completed")
    return EXIT_OK


def report_path(value: Optional[str], settings: Settings, command: str, suffix: str) -> Optional[Path]:
    """A bare --json or --csv flag writes <report_dir>/<command><suffix>."""
    if value is None:
        return None
    if value == "":
        return Path(settings.report_dir) / f"{command}{suffix}"
    return Path(value)


def write_reports(report: RunReport, args: argparse.Namespace, settings: Settings) -> None:
    json_path = report_path(args.json, settings, args.command, ".json")
    csv_path = report_path(args.csv, settings, args.command, ".csv")
    if json_path:
        save_report_json(report, json_path)
        print_info(f"JSON report written to {json_path}")
    if csv_path:
        save_report_csv(report, csv_path)
        print_info(f"CSV summary written to {csv_path}")


def print_report_summary(report: RunReport) -> None:
    result = corpus_result(report)
    for key in report.summary():
        print_info(f"{key}: {result[key]}")
    for error in result["errors"]:
        print_error(error)


async def corpus_command(args: argparse.Namespace, settings: Settings) -> int:
    """Run the security corpus in both build modes."""
    entries = load_corpus(Path(args.directory or settings.corpus_dir))
    cost_model = resolve_cost_model(settings, args)
    print_info(f"Running {len(entries)} corpus entries...")
    report = await run_corpus(entries, [cost_model], settings.max_instructions, settings.workers)
    print_report_summary(report)
    write_reports(report, args, settings)
    if report.passed:
        print_success("All corpus expectations hold")
        return EXIT_OK
    print_error("Corpus expectations failed")
    return EXIT_EXPECTATION


async def bench_command(args: argparse.Namespace, settings: Settings) -> int:
    """Measure cycle overheads, bloat and the header-register benefit."""
    entries = load_corpus(Path(args.directory or settings.corpus_dir))
    cost_model = resolve_cost_model(settings, args)
    report = await run_bench(
        entries,
        cost_model,
        sweep=args.sweep,
        max_instructions=settings.max_instructions,
        tight_loop_entry=settings.tight_loop_entry,
    )
    print_report_summary(report)
    for row in report.overheads:
        print_info(
            f"{row.entry:<16} cache={row.cache_size:<6} headerregs={'on ' if row.headerregs else 'off'} "
            f"ratio={row.ratio:.3f} header_reads={row.header_reads}"
        )
    bloat = report.bloat
    print_info(
        f"Size bloat: median {bloat.median_bloat:.1%}, mean {bloat.mean_bloat:.1%} "
        f"(reference figure <{bloat.reference_ratio:.0%}; {bloat.compiler_regime})"
    )
    if report.header_reg_benefit:
        benefit = report.header_reg_benefit
        print_info(
            f"Header registers on {benefit.entry}: {benefit.header_reads_off} -> {benefit.header_reads_on} "
            f"header reads ({benefit.reduction:.1%} fewer)"
        )
    write_reports(report, args, settings)
    if report.passed:
        print_success("Benchmark expectations hold")
        return EXIT_OK
    print_error("Benchmark expectations failed")
    return EXIT_EXPECTATION


async def fuzz_command(args: argparse.Namespace, settings: Settings) -> int:
    """Differential fuzzing of generated benign programs."""
    chain = FuzzChain(cost_model=resolve_cost_model(settings, args))
    print_info(f"Fuzzing {args.count} programs from seed {args.seed}...")
    result = await asyncio.to_thread(chain.run, args.count, args.seed)
    if result["success"]:
        print_success(f"{result['programs']} programs, no divergences")
        return EXIT_OK
    for error in result["errors"][:20]:
        print_error(error)
    print_error(f"{result['divergences']} divergent programs; seeds {result['failing_seeds'][:10]}")
    return EXIT_EXPECTATION


def schema_command() -> int:
    """Print the JSON Schema of the report format."""
    print(json.dumps(RunReport.model_json_schema(), indent=2))
    return EXIT_OK


def add_cost_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--cache", type=int, metavar="BYTES", help="L1 size in bytes (0 disables the cache)")
    parser.add_argument("--headerregs", action="store_true", help="Model the on-chip header registers")
    parser.add_argument("--cost-config", help="key = value cost config file (overrides GANDALF_COST_CONFIG)")


def create_parser() -> argparse.ArgumentParser:
    """Create argument parser."""
    parser = argparse.ArgumentParser(
        description="GANDALF bounds-checking ISA simulator CLI",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py compile prog.mg --gandalf -o prog.img   # Instrumented build
  python main.py compile prog.mg --emit-asm --dump-layout
  python main.py run prog.img --trace                    # Run with an instruction trace
  python main.py run prog.img --cache 0 --headerregs     # No L1, header registers on
  python main.py corpus data/corpus --json report.json   # Security suite
  python main.py corpus --json --csv                      # Settings corpus_dir, report_dir
  python main.py bench data/corpus --sweep               # Overhead sweep
  python main.py fuzz --count 1000 --seed 7              # Differential fuzzing
  python main.py schema                                  # Report JSON Schema

Exit codes: 0 success, 1 program trapped, 2 usage or compile error,
3 corpus/bench/fuzz expectation failure.
        """
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # Compile command
    compile_parser = subparsers.add_parser("compile", help="Compile a mini-G source file")
    compile_parser.add_argument("source", help="mini-G source file")
    compile_parser.add_argument("--gandalf", action="store_true", help="Emit Protection-Header instrumentation")
    compile_parser.add_argument("-o", "--output", help="Image path (default: source with .img suffix)")
    compile_parser.add_argument("--emit-asm", action="store_true", help="Print the generated assembly")
    compile_parser.add_argument("--dump-layout", action="store_true", help="Print frame layouts as JSON")

    # Run command
    run_parser = subparsers.add_parser("run", help="Run an image (.img) or assembly file (.s)")
    run_parser.add_argument("image", help="Program image or assembly file")
    run_parser.add_argument("--trace", action="store_true", help="Print every instruction and check")
    run_parser.add_argument("--max-insns", type=int, help="Instruction limit")
    add_cost_flags(run_parser)

    # Corpus command
    corpus_parser = subparsers.add_parser("corpus", help="Run the exploit and benign corpus")
    corpus_parser.add_argument("directory", nargs="?", help="Corpus directory (default: GANDALF_CORPUS_DIR)")
    corpus_parser.add_argument("--json", nargs="?", const="", metavar="PATH", help="Write the JSON report (bare flag: GANDALF_REPORT_DIR)")
    corpus_parser.add_argument("--csv", nargs="?", const="", metavar="PATH", help="Write the CSV summary (bare flag: GANDALF_REPORT_DIR)")
    add_cost_flags(corpus_parser)

    # Bench command
    bench_parser = subparsers.add_parser("bench", help="Measure overheads on the benign corpus")
    bench_parser.add_argument("directory", nargs="?", help="Corpus directory (default: GANDALF_CORPUS_DIR)")
    bench_parser.add_argument("--sweep", action="store_true", help="Sweep every cache size")
    bench_parser.add_argument("--json", nargs="?", const="", metavar="PATH", help="Write the JSON report (bare flag: GANDALF_REPORT_DIR)")
    bench_parser.add_argument("--csv", nargs="?", const="", metavar="PATH", help="Write the CSV summary (bare flag: GANDALF_REPORT_DIR)")
    add_cost_flags(bench_parser)

    # Fuzz command
    fuzz_parser = subparsers.add_parser("fuzz", help="Differential fuzzing of generated programs")
    fuzz_parser.add_argument("--count", type=int, default=1000, help="Programs to generate (default: 1000)")
    fuzz_parser.add_argument("--seed", type=int, default=0, help="Generator seed (default: 0)")
    add_cost_flags(fuzz_parser)

    # Schema command
    subparsers.add_parser("schema", help="Print the report JSON Schema")

    return parser


async def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI function; returns the process exit code."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    try:
        settings = get_settings()
    except ValidationError as e:
        print_error(f"Invalid configuration: {e}")
        return EXIT_USAGE

    # Only warnings and errors reach the console unless --verbose
    settings.setup_logging(console_level="DEBUG" if args.verbose else "WARNING")

    try:
        if args.command == "compile":
            return await compile_command(args)

        elif args.command == "run":
            return await run_command(args, settings)

        elif args.command == "corpus":
            return await corpus_command(args, settings)

        elif args.command == "bench":
            return await bench_command(args, settings)

        elif args.command == "fuzz":
            return await fuzz_command(args, settings)

        elif args.command == "schema":
            return schema_command()

        else:
            print_error(f"Unknown command: {args.command}")
            parser.print_help()
            return EXIT_USAGE

    except (ConfigError, CorpusError, CompileError, CorpusChainError) as e:
        print_error(str(e))
        return EXIT_USAGE
    except ValidationError as e:
        print_error(f"Invalid cost model: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        print_info("\nOperation cancelled by user")
        return EXIT_USAGE


if __name__ == "__main__":
    try:
        sys.exit(asyncio.run(main()))
    except KeyboardInterrupt:
        print_info("\nGoodbye!")
    except Exception as e:
        print_error(f"Fatal error: {e}")
        sys.exit(EXIT_USAGE)
