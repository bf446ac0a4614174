"""
CSV and JSON writers for simulation statistics and sweep tables.

Column order is fixed so repeated runs diff cleanly; nothing time-dependent is
written.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from .runner import SweepRow
from .stats import ComparisonReport, SimStats

logger = logging.getLogger(__name__)

STATS_COLUMNS = (
    "protocol",
    "delta1",
    "delta2",
    "eps1",
    "eps2",
    "m1",
    "m2",
    "trials",
    "successes",
    "failure_prob",
    "rate1",
    "rate2",
    "stderr1",
    "stderr2",
    "mean_slots",
    "k_mean",
    "k_aligned_mean",
)

SWEEP_COLUMNS = (
    "status",
    "delta1",
    "delta2",
    "eps1",
    "eps2",
    "corner_r1",
    "corner_r2",
    "m1",
    "m2",
    "trials",
    "failure_prob",
    "rate1",
    "rate2",
    "stderr1",
    "stderr2",
    "contained",
    "error",
)

PathLike = Union[str, Path]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(columns: Sequence[str], rows: List[Dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def stats_row(stats: SimStats) -> Dict:
    row = stats.to_dict()
    row.update(stats.params.as_dict())
    return row


def stats_to_json(
    stats: SimStats,
    report: Optional[ComparisonReport] = None,
    metadata: Optional[Dict] = None,
) -> str:
    """Stable JSON document: stats, optional corner comparison, and run metadata."""
    doc: Dict = {"stats": stats.to_dict()}
    if report is not None:
        doc["comparison"] = report.to_dict()
    if metadata:
        doc["metadata"] = metadata
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def stats_to_csv(stats_list: Sequence[SimStats]) -> str:
    return _csv_text(STATS_COLUMNS, [stats_row(s) for s in stats_list])


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    return _csv_text(SWEEP_COLUMNS, [r.to_dict() for r in rows])


def sweep_to_json(rows: Sequence[SweepRow], metadata: Optional[Dict] = None) -> str:
    doc: Dict = {"rows": []}
    for r in rows:
        entry = r.to_dict()
        if r.report is not None:
            entry["reasons"] = list(r.report.reasons)
        doc["rows"].append(entry)
    if metadata:
        doc["metadata"] = metadata
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_text(path: PathLike, text: str) -> Path:
    """Write text with '\\n' line endings, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    logger.debug("wrote %s (%d bytes)", path, len(text))
    return path


def write_stats_json(path: PathLike, stats: SimStats, **kwargs) -> Path:
    return write_text(path, stats_to_json(stats, **kwargs))


def write_sweep_csv(path: PathLike, rows: Sequence[SweepRow]) -> Path:
    return write_text(path, sweep_to_csv(rows))
