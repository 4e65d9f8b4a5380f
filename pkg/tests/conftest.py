"""
Shared fixtures for the GANDALF test suite.
"""

import os
import sys
from pathlib import Path
from typing import Dict, List

import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.report import CorpusEntry  # noqa: E402
from storage.corpus_store import load_corpus  # noqa: E402

REPO_ROOT = Path(__file__).resolve().parent.parent
CORPUS_DIR = REPO_ROOT / "data" / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS_DIR


@pytest.fixture(scope="session")
def corpus_entries() -> List[CorpusEntry]:
    return load_corpus(CORPUS_DIR)


@pytest.fixture(scope="session")
def corpus_by_name(corpus_entries) -> Dict[str, CorpusEntry]:
    return {entry.name: entry for entry in corpus_entries}
