"""
FPC Trigger

The first prediction cycle is the anchor of the FIRST window of the first
run of k consecutive Unhealthy classifications. Cells without such a run
are reported untriggered.
"""

from __future__ import annotations
from typing import Optional, Protocol, Sequence, Tuple

import numpy as np

from ..contracts.base import ConfigError, DataError, ErrorCode
from ..contracts.data_contracts import CellHistory
from ..contracts.inference_contracts import FPCDecision
from .hs_model import DECISION_THRESHOLD


class ProbabilitySource(Protocol):
    """What decide_fpc needs from a stage-1 model."""

    @property
    def n_w(self) -> int: ...

    def probabilities(self, cell: CellHistory) -> Tuple[np.ndarray, np.ndarray]: ...


def first_run_start(flags: Sequence[bool], k: int) -> Optional[int]:
    """Index where the first run of k consecutive True values begins, or None."""
    if k < 1:
        raise ConfigError(ErrorCode.CONFIG_INVALID, "trigger length k must be >= 1", k=k)
    run = 0
    for i, flag in enumerate(flags):
        run = run + 1 if flag else 0
        if run == k:
            return i - k + 1
    return None


def decision_from_trace(
    cell_id: str,
    eol: int,
    anchors: Sequence[int],
    probabilities: Sequence[float],
    k: int = 5,
) -> FPCDecision:
    """Apply the trigger rule to an anchor-ordered probability trace."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    start = first_run_start(probabilities > DECISION_THRESHOLD, k)
    fpc = int(anchors[start]) if start is not None else None
    # the last anchor is eol itself, which leaves no post-FPC span
    if fpc is not None and fpc >= eol:
        fpc = None
    return FPCDecision(
        cell_id=cell_id,
        eol=eol,
        fpc_cycle=fpc,
        triggered=fpc is not None,
        trace=tuple((int(a), float(p)) for a, p in zip(anchors, probabilities)),
    )


def decide_fpc(model: ProbabilitySource, cell: CellHistory, k: int = 5) -> FPCDecision:
    """Scan the cell's windows in anchor order and apply the trigger rule."""
    if cell.eol < model.n_w + k - 1:
        raise DataError(
            ErrorCode.CELL_TOO_SHORT,
            f"cell has {cell.eol} cycles; the trigger needs at least n_w + k - 1 = {model.n_w + k - 1}",
            cell_id=cell.cell_id,
        )
    anchors, probabilities = model.probabilities(cell)
    return decision_from_trace(cell.cell_id, cell.eol, anchors, probabilities, k)
