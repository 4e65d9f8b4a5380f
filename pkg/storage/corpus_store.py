"""
Corpus directory loader.

Each entry is ``<name>.mg`` (mini-G source) plus ``<name>.expect``, a
key-value manifest:

    category = exploit
    with = trapped
    reason = above-bound
    without = corrupted
    without_exit = 1337
    clean_exit = 7
"""

import logging
from pathlib import Path
from typing import Dict, List

from pydantic import ValidationError

from models.report import CorpusEntry

logger = logging.getLogger(__name__)

MANIFEST_KEYS = {
    "category": "category",
    "with": "expected_with",
    "reason": "expected_reason",
    "exit": "expected_exit",
    "without": "expected_without",
    "without_exit": "without_exit",
    "clean_exit": "clean_exit",
    "description": "description",
}
INTEGER_KEYS = {"exit", "without_exit", "clean_exit"}


class CorpusError(Exception):
    """Missing, unreadable or malformed corpus entry."""
    pass


def parse_manifest(text: str, source: str = "<manifest>") -> Dict[str, object]:
    """
    Parse an expectation manifest into CorpusEntry field values.

    Raises:
        CorpusError: Malformed lines, unknown keys or non-integer exit values
    """
    fields: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in MANIFEST_KEYS:
            raise CorpusError(f"{source}:{lineno}: unknown or malformed manifest line {raw.strip()!r}")
        if key in INTEGER_KEYS:
            try:
                fields[MANIFEST_KEYS[key]] = int(value, 0)
            except ValueError:
                raise CorpusError(f"{source}:{lineno}: {key} must be an integer")
        else:
            fields[MANIFEST_KEYS[key]] = value
    return fields


def load_entry(source_path: Path) -> CorpusEntry:
    """
    Load one entry from its ``.mg`` path; the manifest sits beside it.

    Raises:
        CorpusError: If either file is missing or the manifest is invalid
    """
    manifest_path = source_path.with_suffix(".expect")
    try:
        source = source_path.read_text(encoding="utf-8")
        manifest = manifest_path.read_text(encoding="utf-8")
    except OSError as e:
        raise CorpusError(f"cannot read corpus entry {source_path.stem}: {e}")

    fields = parse_manifest(manifest, source=str(manifest_path))
    try:
        return CorpusEntry(name=source_path.stem, source=source, **fields)
    except ValidationError as e:
        raise CorpusError(f"invalid manifest {manifest_path}: {e.errors()[0]['msg']}")


def load_corpus(directory: Path) -> List[CorpusEntry]:
    """
    Load every entry of a corpus directory, sorted by name.

    Raises:
        CorpusError: If the directory holds no entries or any entry is invalid
    """
    if not directory.is_dir():
        raise CorpusError(f"corpus directory {directory} does not exist")
    entries = [load_entry(path) for path in sorted(directory.glob("*.mg"))]
    if not entries:
        raise CorpusError(f"no *.mg entries in {directory}")
    exploits = sum(1 for e in entries if e.is_exploit)
    logger.info(f"Loaded {len(entries)} corpus entries from {directory} ({exploits} exploits)")
    return entries
