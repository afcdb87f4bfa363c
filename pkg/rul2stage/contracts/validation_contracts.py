"""
Validation Contracts

Immutable evaluation outputs: per-cell metrics, the fleet report and the
conventional-scheme split used by the baseline harness.
"""

from __future__ import annotations
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .base import ConfigError, ErrorCode
from .inference_contracts import FPCDecision, RULCurve


@dataclass(frozen=True)
class CellMetrics:
    """MSE / MAE over all points, MAPE over points whose target passes the floor."""
    mse: float
    mae: float
    mape: Optional[float]
    n_points: int
    n_mape_points: int


@dataclass(frozen=True)
class CellReportRow:
    cell_id: str
    eol: int
    fpc_cycle: Optional[int]
    triggered: bool
    metrics: Optional[CellMetrics] = None


@dataclass(frozen=True)
class AggregateMetrics:
    """Unweighted mean of per-cell metrics over triggered cells."""
    mse: float
    mae: float
    mape: Optional[float]
    n_cells: int


@dataclass(frozen=True)
class MetricsReport:
    """
    Fleet evaluation result. Rows are ordered by cell_id; aggregates use
    triggered cells only and untriggered cells are listed separately.
    """
    rows: Tuple[CellReportRow, ...]
    aggregate: Optional[AggregateMetrics]
    untriggered: Tuple[str, ...]
    curves: Tuple[RULCurve, ...] = field(default_factory=tuple)
    decisions: Tuple[FPCDecision, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class BaselineSplit:
    """Conventional scheme: first q of the cycles are input, the rest target."""
    cell_id: str
    q: float
    input_end: int     # last input cycle (1-based, inclusive)
    eol: int

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "q must be in (0, 1)", q=self.q)
        if not 1 <= self.input_end < self.eol:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "segments must partition the cell", cell_id=self.cell_id)

    @property
    def input_cycles(self) -> Tuple[int, int]:
        return (1, self.input_end)

    @property
    def target_cycles(self) -> Tuple[int, int]:
        return (self.input_end + 1, self.eol)

    @property
    def horizon(self) -> int:
        return self.eol - self.input_end


@dataclass(frozen=True)
class BaselineResult:
    """
    Capacity forecast over the target segment, its error metrics, and the
    same forecast read as an RUL fraction: the first forecast cycle at or
    below 80% of the cycle-1 capacity is the predicted EOL. eol_censored
    means the forecast never got there and predicted_eol is its last cycle.
    """
    cell_id: str
    split: BaselineSplit
    forecast: Tuple[float, ...]
    metrics: CellMetrics
    predicted_eol: int
    eol_censored: bool
    rul_metrics: CellMetrics
