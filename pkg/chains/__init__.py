"""
Harness workflows: corpus verdicts, overhead and bloat measurement, fuzzing.
"""

from .corpus_chain import measure_bloat, measure_overheads, run_corpus
from .fuzz_chain import FuzzChain, generate_program

__all__ = ["run_corpus", "measure_overheads", "measure_bloat", "FuzzChain", "generate_program"]
