"""
Report persistence: full JSON report and a CSV summary table.
"""

import csv
import json
import logging
from pathlib import Path
from typing import List

from models.report import RunReport

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "entry",
    "category",
    "cost_model",
    "passed",
    "with_status",
    "with_reason",
    "with_exit",
    "without_status",
    "without_exit",
    "gandalf_cycles",
    "plain_cycles",
    "cycle_overhead",
    "header_reads",
    "size_bloat",
]


def report_json(report: RunReport, include_timestamp: bool = True) -> str:
    """Serialize a report; without the timestamp the text is deterministic."""
    exclude = None if include_timestamp else {"generated_at"}
    data = json.loads(report.model_dump_json(exclude=exclude))
    data["summary"] = report.summary()
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def save_report_json(report: RunReport, path: Path) -> Path:
    """Write the JSON report, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_json(report), encoding="utf-8")
    logger.info(f"Wrote JSON report {path}")
    return path


def summary_rows(report: RunReport) -> List[dict]:
    rows = []
    for e in report.entries:
        rows.append({
            "entry": e.name,
            "category": e.category.value,
            "cost_model": e.cost_model,
            "passed": e.passed,
            "with_status": e.with_gandalf.status.value,
            "with_reason": e.with_gandalf.trap_reason or "",
            "with_exit": e.with_gandalf.final_exit_value,
            "without_status": e.without_gandalf.status.value,
            "without_exit": e.without_gandalf.final_exit_value,
            "gandalf_cycles": e.with_gandalf.cycles,
            "plain_cycles": e.without_gandalf.cycles,
            "cycle_overhead": "" if e.cycle_overhead is None else f"{e.cycle_overhead:.4f}",
            "header_reads": e.with_gandalf.mem_stats.header_reads,
            "size_bloat": f"{e.size_bloat:.4f}",
        })
    return rows


def save_report_csv(report: RunReport, path: Path) -> Path:
    """Write one CSV row per entry result."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        writer.writerows(summary_rows(report))
    logger.info(f"Wrote CSV summary {path}")
    return path
