"""
Process scheduler tests: flag save/restore across context switches and
preemption inside header-write windows.
"""

import pytest

from agents.simulator import run_image
from compiler import build_image
from models.memsys import CostModel
from models.run import RunStatus
from schedulers.process_scheduler import ProcessScheduler, SchedulerError, run_interleaved


@pytest.fixture(scope="module")
def images(corpus_by_name):
    def build(name, gandalf=True):
        return build_image(corpus_by_name[name].source, gandalf)
    return build


class TestSingleProcess:
    """One process behaves exactly like a standalone run."""

    def test_matches_run_image(self, images):
        image = images("factorial")
        solo = run_image(image)
        scheduled = run_interleaved({"factorial": image}, quantum=13)["factorial"]
        assert scheduled.status == solo.status == RunStatus.COMPLETED
        assert scheduled.final_exit_value == solo.final_exit_value == 120
        assert scheduled.cycles == solo.cycles
        assert scheduled.instructions == solo.instructions


class TestInterleaving:
    """Several processes on one core."""

    def test_exploit_alongside_benign(self, images):
        outcomes = run_interleaved(
            {"stack_smash": images("stack_smash"), "array_sum": images("array_sum", gandalf=False)},
            quantum=7,
        )
        assert outcomes["stack_smash"].status == RunStatus.TRAPPED
        assert outcomes["stack_smash"].trap_reason == "above-bound"
        assert outcomes["array_sum"].status == RunStatus.COMPLETED
        assert outcomes["array_sum"].final_exit_value == 84

    def test_preemption_inside_header_write_window(self, images):
        names = ("stack_smash", "array_sum", "nested_calls")
        preempted = []

        def in_window(name, machine):
            if machine.spr.phwe:
                preempted.append(name)
                return True
            return False

        scheduler = ProcessScheduler(quantum=50, preempt_after=in_window)
        for name in names:
            scheduler.add_process(name, images(name))
        outcomes = scheduler.run()
        assert preempted
        for name in names:
            solo = run_image(images(name))
            assert outcomes[name].status == solo.status
            assert outcomes[name].final_exit_value == solo.final_exit_value
            assert outcomes[name].trap_reason == solo.trap_reason

    def test_flags_leak_without_restore(self, images):
        images_by_name = {"checked": images("array_sum"), "plain": images("array_sum", gandalf=False)}
        leaking = run_interleaved(images_by_name, quantum=5, restore_flags=False)
        assert leaking["checked"].final_exit_value == 84
        assert leaking["plain"].status == RunStatus.TRAPPED
        assert leaking["plain"].trap_reason == "bad-magic"

        restored = run_interleaved(images_by_name, quantum=5, restore_flags=True)
        assert restored["plain"].status == RunStatus.COMPLETED
        assert restored["plain"].final_exit_value == 84

    def test_per_process_stats(self, images):
        scheduler = ProcessScheduler(quantum=11)
        scheduler.add_process("checked", images("array_sum"))
        scheduler.add_process("plain", images("array_sum", gandalf=False))
        outcomes = scheduler.run()
        assert outcomes["checked"].mem_stats.header_reads > 0
        assert outcomes["plain"].mem_stats.header_reads == 0
        assert scheduler.get_stats()["finished"] == 2


class TestContextSwitch:
    """Direct use of context_switch."""

    def test_saves_and_restores_flags(self, images):
        scheduler = ProcessScheduler(CostModel(headerregs_enabled=True))
        first = scheduler.add_process("a", images("zero_vars"))
        second = scheduler.add_process("b", images("zero_vars"))
        assert first.machine.spr is second.machine.spr is scheduler.core_spr

        scheduler.context_switch(first)
        scheduler.core_spr.geb = True
        scheduler.core_spr.phwe = True
        scheduler.memsys.store_buffer.push(0x100, 1)
        scheduler.context_switch(second)
        assert (first.saved_geb, first.saved_phwe) == (True, True)
        assert (scheduler.core_spr.geb, scheduler.core_spr.phwe) == (False, False)
        assert len(scheduler.memsys.store_buffer) == 0
        assert scheduler.memsys.header_regs.cached_object_base is None

        scheduler.context_switch(first)
        assert (scheduler.core_spr.geb, scheduler.core_spr.phwe) == (True, True)
        assert first.switches == 2
        assert scheduler.switch_count == 3

    def test_switch_to_running_process_is_a_no_op(self, images):
        scheduler = ProcessScheduler()
        context = scheduler.add_process("a", images("zero_vars"))
        scheduler.context_switch(context)
        scheduler.context_switch(context)
        assert scheduler.switch_count == 1


class TestSchedulerErrors:
    """Invalid use."""

    def test_quantum_must_be_positive(self):
        with pytest.raises(SchedulerError):
            ProcessScheduler(quantum=0)

    def test_duplicate_name(self, images):
        scheduler = ProcessScheduler()
        scheduler.add_process("a", images("zero_vars"))
        with pytest.raises(SchedulerError):
            scheduler.add_process("a", images("zero_vars"))

    def test_nothing_to_run(self):
        with pytest.raises(SchedulerError):
            ProcessScheduler().run()

    def test_instruction_limit(self, images):
        scheduler = ProcessScheduler(max_instructions=20)
        scheduler.add_process("loop", images("tight_loop"))
        assert scheduler.run()["loop"].status == RunStatus.EXHAUSTED
