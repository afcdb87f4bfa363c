"""
Observability & Audit Layer

RESPONSIBILITY: Training metrics, pipeline audit trail
ALLOWED INPUTS: Values and events reported by other layers
OUTPUTS: MetricPoint series, hash-chained AuditEntry log

WHAT THIS LAYER MUST NOT DO:
============================
- Modify system behavior
- Filter or interpret events (only record them)
- Make decisions based on logged data

DETERMINISM:
============
Entries are ordered by sequence number, never by wall-clock time, so two
identical runs produce byte-identical audit files.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Tuple
import hashlib
import json

from ..contracts.base import Error, ErrorCode


# =============================================================================
# METRICS COLLECTOR
# =============================================================================

@dataclass(frozen=True)
class MetricPoint:
    """One recorded value of a named series."""
    metric_name: str
    value: float
    sequence: int
    labels: Tuple[Tuple[str, str], ...] = field(default_factory=tuple)


class MetricsCollector:
    """
    Collect per-epoch and per-stage metrics.

    Metrics are append-only series keyed by name; labels distinguish stages
    (e.g. stage=hs vs stage=rul) within one series.
    """

    def __init__(self):
        self._metrics: Dict[str, List[MetricPoint]] = {}
        self._sequence = 0

    def record(
        self,
        metric_name: str,
        value: float,
        labels: Optional[Dict[str, str]] = None
    ) -> MetricPoint:
        """Record a metric data point."""
        self._sequence += 1
        point = MetricPoint(
            metric_name=metric_name,
            value=float(value),
            sequence=self._sequence,
            labels=tuple(sorted(labels.items())) if labels else ()
        )
        self._metrics.setdefault(metric_name, []).append(point)
        return point

    def get_metric(
        self,
        metric_name: str,
        labels: Optional[Dict[str, str]] = None
    ) -> List[MetricPoint]:
        """Get data points, optionally restricted to a label set."""
        points = self._metrics.get(metric_name, [])
        if labels:
            wanted = set(labels.items())
            points = [p for p in points if wanted.issubset(set(p.labels))]
        return list(points)

    def get_latest(self, metric_name: str) -> Optional[MetricPoint]:
        points = self._metrics.get(metric_name, [])
        return points[-1] if points else None

    def compute_aggregates(
        self,
        metric_name: str,
        labels: Optional[Dict[str, str]] = None
    ) -> Dict[str, float]:
        """Compute aggregate statistics for a metric."""
        values = [p.value for p in self.get_metric(metric_name, labels)]
        if not values:
            return {}
        return {
            'count': len(values),
            'sum': sum(values),
            'min': min(values),
            'max': max(values),
            'avg': sum(values) / len(values),
        }


# =============================================================================
# AUDIT LOG
# =============================================================================

class AuditEventType(Enum):
    STAGE_STARTED = "stage_started"
    STAGE_COMPLETED = "stage_completed"
    CELL_UNTRIGGERED = "cell_untriggered"
    ARTIFACT_WRITTEN = "artifact_written"
    RUN_FAILED = "run_failed"


@dataclass(frozen=True)
class AuditEntry:
    """Immutable, hash-chained audit record."""
    sequence: int
    event_type: AuditEventType
    details: Tuple[Tuple[str, str], ...]
    previous_hash: str
    entry_hash: str

    @staticmethod
    def compute_hash(
        sequence: int,
        event_type: AuditEventType,
        details: Tuple[Tuple[str, str], ...],
        previous_hash: str
    ) -> str:
        body = json.dumps([sequence, event_type.value, list(details), previous_hash])
        return hashlib.sha256(body.encode('utf-8')).hexdigest()

    def to_json(self) -> str:
        return json.dumps({
            'sequence': self.sequence,
            'event_type': self.event_type.value,
            'details': dict(self.details),
            'previous_hash': self.previous_hash,
            'entry_hash': self.entry_hash,
        }, sort_keys=True)


class AuditLog:
    """
    Append-only pipeline audit trail.

    GUARANTEES:
    ===========
    1. NO updates or deletes - entries are immutable once written
    2. Deterministic - same events in same order -> same head hash
    3. Verifiable - hash chain ensures integrity
    """

    def __init__(self):
        self._entries: List[AuditEntry] = []
        self._head_hash = ""

    @property
    def head_hash(self) -> str:
        return self._head_hash

    def append(self, event_type: AuditEventType, **details: object) -> AuditEntry:
        """Append an event. This is the ONLY write operation."""
        sequence = len(self._entries) + 1
        detail_pairs = tuple(sorted((k, str(v)) for k, v in details.items()))
        entry = AuditEntry(
            sequence=sequence,
            event_type=event_type,
            details=detail_pairs,
            previous_hash=self._head_hash,
            entry_hash=AuditEntry.compute_hash(sequence, event_type, detail_pairs, self._head_hash)
        )
        self._entries.append(entry)
        self._head_hash = entry.entry_hash
        return entry

    def replay(self, event_type: Optional[AuditEventType] = None) -> Iterator[AuditEntry]:
        for entry in self._entries:
            if event_type is None or entry.event_type == event_type:
                yield entry

    def verify_integrity(self) -> Tuple[bool, Optional[Error]]:
        """
        Verify hash chain integrity.

        Returns (is_valid, error); error names the first broken sequence.
        """
        expected_previous = ""
        for entry in self._entries:
            recomputed = AuditEntry.compute_hash(
                entry.sequence, entry.event_type, entry.details, entry.previous_hash
            )
            if entry.previous_hash != expected_previous or recomputed != entry.entry_hash:
                return (False, Error(
                    code=ErrorCode.CHECKPOINT_CORRUPT,
                    message=f"Audit chain broken at sequence {entry.sequence}",
                    context=(
                        ("expected_previous", expected_previous),
                        ("actual_previous", entry.previous_hash),
                    )
                ))
            expected_previous = entry.entry_hash
        return (True, None)

    def write_jsonl(self, path: Path) -> Path:
        path = Path(path)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            for entry in self._entries:
                f.write(entry.to_json() + "\n")
        return path

    def __len__(self) -> int:
        return len(self._entries)
