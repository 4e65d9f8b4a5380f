"""
Corpus loading and report persistence.
"""

from .corpus_store import CorpusError, load_corpus, load_entry
from .report_store import save_report_csv, save_report_json

__all__ = ["CorpusError", "load_corpus", "load_entry", "save_report_csv", "save_report_json"]
