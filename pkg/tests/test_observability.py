"""
Observability Tests
===================

Metrics collector and hash-chained audit log.
"""

import json

from rul2stage.observability import AuditEventType, AuditLog, MetricsCollector


class TestMetricsCollector:

    def test_label_filter(self):
        metrics = MetricsCollector()
        metrics.record("val_loss", 0.5, {"stage": "hs", "epoch": "1"})
        metrics.record("val_loss", 0.4, {"stage": "rul", "epoch": "1"})
        metrics.record("val_loss", 0.3, {"stage": "hs", "epoch": "2"})
        assert [p.value for p in metrics.get_metric("val_loss", {"stage": "hs"})] == [0.5, 0.3]
        assert metrics.get_latest("val_loss").value == 0.3

    def test_aggregates(self):
        metrics = MetricsCollector()
        for v in (1.0, 2.0, 3.0):
            metrics.record("x", v)
        agg = metrics.compute_aggregates("x")
        assert agg["count"] == 3 and agg["avg"] == 2.0 and agg["max"] == 3.0
        assert metrics.compute_aggregates("missing") == {}


class TestAuditLog:
    """Append-only, deterministic, verifiable."""

    def _log(self):
        log = AuditLog()
        log.append(AuditEventType.STAGE_STARTED, stage="train")
        log.append(AuditEventType.CELL_UNTRIGGERED, cell_id="cell003", split="test")
        log.append(AuditEventType.STAGE_COMPLETED, stage="train")
        return log

    def test_chain_verifies(self):
        ok, error = self._log().verify_integrity()
        assert ok and error is None

    def test_same_events_same_head(self):
        assert self._log().head_hash == self._log().head_hash
        assert len(self._log().head_hash) == 64

    def test_replay_filters(self):
        entries = list(self._log().replay(AuditEventType.CELL_UNTRIGGERED))
        assert len(entries) == 1 and dict(entries[0].details)["cell_id"] == "cell003"

    def test_jsonl(self, tmp_path):
        path = self._log().write_jsonl(tmp_path / "audit.jsonl")
        lines = path.read_text(encoding="utf-8").splitlines()
        assert [json.loads(line)["sequence"] for line in lines] == [1, 2, 3]
        assert json.loads(lines[1])["details"] == {"cell_id": "cell003", "split": "test"}
