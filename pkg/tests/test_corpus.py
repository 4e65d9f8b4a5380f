"""
Corpus harness tests: exploit detection, benign transparency, header
sweep, bloat and overhead measurements.
"""

import asyncio

import pytest

from chains.corpus_chain import (
    build_entry,
    count_variables,
    judge,
    locality_violations,
    measure_bloat,
    measure_header_reg_benefit,
    measure_overheads,
    run_bench,
    run_corpus,
    sweep_cost_model,
)
from compiler.codegen import boilerplate_count
from models.machine import TrapKind, TrapRecord
from models.memsys import CostModel
from models.report import EntryCategory, OverheadRow
from models.run import RunOutcome, RunStatus
from storage.report_store import report_json


def trapped(reason: str) -> RunOutcome:
    trap = TrapRecord(kind=TrapKind.MISMATCH, pc=0x1000, effective_address=0x2000, reason=reason)
    return RunOutcome(status=RunStatus.TRAPPED, trap=trap)


def completed(value: int) -> RunOutcome:
    return RunOutcome(status=RunStatus.COMPLETED, final_exit_value=value)


def overhead_row(entry: str, cache_size: int, ratio: float) -> OverheadRow:
    return OverheadRow(
        entry=entry,
        cache_size=cache_size,
        headerregs=False,
        plain_cycles=100,
        gandalf_cycles=int(100 * ratio),
        ratio=ratio,
        header_reads=0,
        plain_header_reads=0,
        checked_accesses=0,
        header_reg_hits=0,
        gandalf_hit_rate=0.0,
        plain_hit_rate=0.0,
    )


class TestCorpusRun:
    """The shipped corpus under the default cost model."""

    @pytest.fixture(scope="class")
    def report(self, corpus_entries):
        return asyncio.run(run_corpus(corpus_entries))

    def test_every_entry_passes(self, report):
        failures = [f for e in report.entries for f in e.failures]
        assert report.passed, failures + report.suite_errors
        assert report.pass_rate == 1.0

    def test_detection_rates(self, report):
        assert report.exploit_trap_rate == 1.0
        assert report.exploit_plain_trap_rate == 0.0
        assert report.benign_trap_rate == 0.0

    def test_corpus_size(self, report):
        exploits = [e for e in report.entries if e.category == EntryCategory.EXPLOIT]
        benign = [e for e in report.entries if e.category == EntryCategory.BENIGN]
        assert len(exploits) >= 10
        assert len(benign) >= 6

    def test_trap_reasons(self, report):
        by_name = {e.name: e for e in report.entries}
        assert by_name["pointer_arith_escape"].with_gandalf.trap_reason == "above-bound"
        assert by_name["underflow_write"].with_gandalf.trap_reason == "below-base"
        assert by_name["header_forgery"].with_gandalf.trap_reason == "below-base"

    def test_headers_well_formed_after_every_prologue(self, report):
        for e in report.entries:
            assert e.header_blocks_checked > 0, e.name
            assert e.header_blocks_well_formed == e.header_blocks_checked, e.name

    def test_benign_overheads(self, report):
        for e in report.entries:
            if e.category == EntryCategory.BENIGN:
                assert e.cycle_overhead is not None and e.cycle_overhead > 1.0, e.name


class TestDeterminism:
    """Identical inputs give identical reports."""

    @pytest.mark.asyncio
    async def test_report_text_is_stable(self, corpus_by_name):
        entries = [corpus_by_name[n] for n in ("array_sum", "stack_smash", "factorial")]
        first = await run_corpus(entries, workers=3)
        second = await run_corpus(entries, workers=1)
        assert report_json(first, include_timestamp=False) == report_json(second, include_timestamp=False)
        assert [e.name for e in first.entries] == ["array_sum", "stack_smash", "factorial"]

    @pytest.mark.asyncio
    async def test_duplicate_model_names_are_disambiguated(self, corpus_by_name):
        report = await run_corpus([corpus_by_name["zero_vars"]], [CostModel(), CostModel()])
        assert len({m.name for m in report.cost_models}) == 2
        assert len(report.entries) == 2


class TestJudge:
    """Manifest comparison on fabricated outcomes."""

    def test_exploit_as_expected(self, corpus_by_name):
        assert judge(corpus_by_name["stack_smash"], trapped("above-bound"), completed(1337)) == []

    def test_wrong_reason(self, corpus_by_name):
        failures = judge(corpus_by_name["stack_smash"], trapped("bad-magic"), completed(1337))
        assert len(failures) == 1
        assert "reason" in failures[0]

    def test_uncorrupted_plain_run(self, corpus_by_name):
        failures = judge(corpus_by_name["stack_smash"], trapped("above-bound"), completed(7))
        assert any("not corrupted" in f for f in failures)

    def test_benign_trap_is_a_failure(self, corpus_by_name):
        failures = judge(corpus_by_name["array_sum"], trapped("above-bound"), completed(84))
        assert len(failures) == 1

    def test_plain_trap_is_a_failure(self, corpus_by_name):
        failures = judge(corpus_by_name["array_sum"], completed(84), trapped("bad-magic"))
        assert len(failures) == 1


class TestBloat:
    """Static instruction bloat."""

    @pytest.fixture(scope="class")
    def stats(self, corpus_entries):
        return measure_bloat(corpus_entries)

    def test_zero_variable_boilerplate(self, stats):
        row = stats.row("zero_vars")
        assert row.variables == 0
        assert row.instrumented - row.plain == boilerplate_count(1)

    def test_every_entry_grows(self, stats):
        assert all(row.bloat > 0 for row in stats.rows)

    def test_loop_amortizes_instrumentation(self, stats):
        assert stats.row("big_loop").bloat < stats.median_bloat

    def test_reference_figure_reported(self, stats):
        assert stats.reference_ratio == pytest.approx(0.30)
        assert stats.compiler_regime

    def test_count_variables(self, corpus_by_name):
        built = build_entry(corpus_by_name["tight_loop"])
        assert count_variables(built.instrumented) == 1
        assert count_variables(build_entry(corpus_by_name["big_loop"]).instrumented) == 6


class TestOverheads:
    """Cache sweep and header registers."""

    @pytest.fixture(scope="class")
    def rows(self, corpus_by_name):
        entries = [corpus_by_name[n] for n in ("array_sum", "tight_loop", "stack_smash")]
        return measure_overheads(entries, cache_sizes=(0, 4096))

    def test_exploits_skipped(self, rows):
        assert {r.entry for r in rows} == {"array_sum", "tight_loop"}
        assert len(rows) == 2 * 2 * 2

    def test_cache_lowers_the_ratio(self, rows):
        for entry in ("array_sum", "tight_loop"):
            point = {r.cache_size: r for r in rows if r.entry == entry and not r.headerregs}
            assert point[4096].ratio < point[0].ratio
        assert locality_violations(rows) == []

    def test_header_read_accounting(self, rows):
        for r in rows:
            assert r.plain_header_reads == 0
            if not r.headerregs:
                assert r.header_reads == 3 * r.checked_accesses
                assert r.header_reg_hits == 0

    def test_locality_violation_detected(self):
        rows = [overhead_row("x", 0, 1.5), overhead_row("x", 4096, 1.7), overhead_row("y", 0, 2.0), overhead_row("y", 256, 1.1)]
        violations = locality_violations(rows)
        assert len(violations) == 1
        assert violations[0].startswith("x:")

    def test_header_register_benefit(self, corpus_by_name):
        benefit = measure_header_reg_benefit(corpus_by_name["tight_loop"])
        assert benefit.header_reads_on < benefit.header_reads_off
        assert benefit.reduction >= 0.9
        assert benefit.passed


class TestSweepCostModel:
    """Sweep-point cost models."""

    def test_disabled_cache(self):
        model = sweep_cost_model(CostModel(), 0, False)
        assert model.name == "cache0-hroff"
        assert not model.cache.enabled

    def test_sized_cache_with_header_registers(self):
        model = sweep_cost_model(CostModel(), 1024, True)
        assert model.name == "cache1024-hron"
        assert model.cache.total_size == 1024
        assert model.headerregs_enabled

    def test_tiny_cache_shrinks_line(self):
        model = sweep_cost_model(CostModel(), 16, False)
        assert model.cache.line_size == 16


class TestBench:
    """The bench workflow end to end on a small subset."""

    @pytest.mark.asyncio
    async def test_bench_subset(self, corpus_by_name):
        entries = [corpus_by_name[n] for n in ("tight_loop", "zero_vars", "array_sum", "stack_smash")]
        report = await run_bench(entries)
        assert {e.name for e in report.entries} == {"tight_loop", "zero_vars", "array_sum"}
        assert len(report.overheads) == 3 * 2 * 2
        assert report.header_reg_benefit is not None and report.header_reg_benefit.passed
        assert len(report.bloat.rows) == 4
