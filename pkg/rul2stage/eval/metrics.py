"""
Curve Metrics

MSE and MAE over every evaluated point; MAPE only over points whose true
value reaches the floor, since the RUL target is exactly 0 at EOL.
"""

from __future__ import annotations
from typing import Optional, Sequence
import math

import numpy as np
from sklearn.metrics import mean_absolute_error, mean_absolute_percentage_error, mean_squared_error

from ..contracts.base import DataError, ErrorCode
from ..contracts.inference_contracts import RULCurve
from ..contracts.validation_contracts import AggregateMetrics, CellMetrics, CellReportRow

MAPE_FLOOR = 0.01


def series_metrics(predictions, targets, mape_floor: float = MAPE_FLOOR) -> CellMetrics:
    """Metrics of aligned prediction/target vectors."""
    y_hat = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if y.size == 0:
        raise DataError(ErrorCode.EMPTY_INPUT, "no points to evaluate")
    if y_hat.shape != y.shape:
        raise DataError(ErrorCode.SHAPE_MISMATCH, "predictions and targets differ in length")
    kept = y >= mape_floor
    mape = None
    if kept.any():
        mape = float(mean_absolute_percentage_error(y[kept], y_hat[kept]))
    return CellMetrics(
        mse=float(mean_squared_error(y, y_hat)),
        mae=float(mean_absolute_error(y, y_hat)),
        mape=mape,
        n_points=int(y.size),
        n_mape_points=int(kept.sum()),
    )


def compute_metrics(curve: RULCurve, mape_floor: float = MAPE_FLOOR) -> CellMetrics:
    """Metrics of one RUL curve against its targets (reported, clamped predictions)."""
    if not curve.has_targets:
        raise DataError(ErrorCode.EMPTY_INPUT, "curve has no targets", cell_id=curve.cell_id)
    return series_metrics(
        [p.prediction for p in curve.points],
        [p.target for p in curve.points],
        mape_floor,
    )


def _mean(values: Sequence[float]) -> float:
    # correctly rounded sum, so cell order cannot change the last bit
    return math.fsum(values) / len(values)


def aggregate_metrics(rows: Sequence[CellReportRow]) -> Optional[AggregateMetrics]:
    """Unweighted mean over triggered rows; None when no cell triggered."""
    scored = [r.metrics for r in rows if r.triggered and r.metrics is not None]
    if not scored:
        return None
    mapes = [m.mape for m in scored if m.mape is not None]
    return AggregateMetrics(
        mse=_mean([m.mse for m in scored]),
        mae=_mean([m.mae for m in scored]),
        mape=_mean(mapes) if mapes else None,
        n_cells=len(scored),
    )
