"""CSV export of FPC decisions and per-cell probability traces."""

from __future__ import annotations
from typing import Sequence

import pandas as pd

from ..contracts.inference_contracts import FPCDecision


def decisions_to_frame(decisions: Sequence[FPCDecision]) -> pd.DataFrame:
    """Columns cell_id, fpc_cycle, triggered; fpc_cycle is empty when untriggered."""
    return pd.DataFrame({
        "cell_id": [d.cell_id for d in decisions],
        "fpc_cycle": pd.array([d.fpc_cycle for d in decisions], dtype="Int64"),
        "triggered": [d.triggered for d in decisions],
    })


def trace_to_frame(decision: FPCDecision) -> pd.DataFrame:
    return pd.DataFrame({
        "cell_id": decision.cell_id,
        "anchor_cycle": [a for a, _ in decision.trace],
        "probability": [p for _, p in decision.trace],
    })
