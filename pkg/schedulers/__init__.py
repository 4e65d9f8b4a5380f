"""
Multi-process scheduling over a shared memory system.
"""

from .process_scheduler import ProcessScheduler, SchedulerError, run_interleaved

__all__ = ["ProcessScheduler", "SchedulerError", "run_interleaved"]
