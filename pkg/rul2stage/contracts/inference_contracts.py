"""
Inference Contracts

Immutable outputs of the two inference stages: the per-cell FPC decision
(stage 1) and the post-FPC RUL curve (stage 2).
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Optional, Tuple

from .base import DataError, ErrorCode


@dataclass(frozen=True)
class FPCDecision:
    """
    Stage-1 outcome for one cell.

    trace holds (anchor_cycle, unhealthy probability) for every window, in
    anchor order. Untriggered cells keep fpc_cycle None; nothing is guessed.
    """
    cell_id: str
    eol: int
    fpc_cycle: Optional[int]
    triggered: bool
    trace: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        if self.triggered != (self.fpc_cycle is not None):
            raise DataError(ErrorCode.INVALID_FPC, "fpc_cycle must be set iff triggered", cell_id=self.cell_id)
        if self.fpc_cycle is not None and not self.fpc_cycle < self.eol:
            raise DataError(ErrorCode.INVALID_FPC, "fpc_cycle must precede eol", cell_id=self.cell_id)


@dataclass(frozen=True)
class CurvePoint:
    anchor_cycle: int
    prediction: float          # clamped to [0, 1]
    raw_prediction: float      # rectifier output, >= 0
    target: Optional[float] = None


@dataclass(frozen=True)
class RULCurve:
    """Predicted RUL fraction for every post-FPC window of one cell."""
    cell_id: str
    fpc_cycle: int
    points: Tuple[CurvePoint, ...]

    def __post_init__(self):
        anchors = [p.anchor_cycle for p in self.points]
        if any(b <= a for a, b in zip(anchors, anchors[1:])):
            raise DataError(ErrorCode.INVALID_FPC, "curve anchors must increase", cell_id=self.cell_id)
        if anchors and anchors[0] < self.fpc_cycle:
            raise DataError(ErrorCode.INVALID_FPC, "curve starts before fpc", cell_id=self.cell_id)

    @property
    def has_targets(self) -> bool:
        return bool(self.points) and all(p.target is not None for p in self.points)

    def __len__(self) -> int:
        return len(self.points)
