"""
Conventional-Scheme Baseline

The comparison scheme forecasts discharge capacity: the first q of a
cell's cycles are the input and the rest is the ground truth.

FORECASTER:
===========
next = linear least-squares extrapolation of the last n_w values
       + residual_std * network(window)

The network (identity head, one channel) learns the one-step residual
the local line misses. A cell whose residuals vanish (linear or constant
capacity) gets the pure extrapolation, which is exact there. The forecast
is rolled out autoregressively over the target segment.

RUL SCALE:
==========
The first forecast cycle at or below 80% of the cycle-1 capacity is the
predicted EOL. The RUL fraction it implies over the target cycles is
scored against the true fraction with the same metrics as the two-stage
curves, taking the last input cycle as the prediction start.
"""

from __future__ import annotations
from dataclasses import dataclass, replace
from typing import Optional, Tuple
import logging
import math

import numpy as np

from ..contracts.base import ConfigError, DataError, ErrorCode, exact_fraction
from ..contracts.data_contracts import CellHistory
from ..contracts.model_contracts import HeadType, LossType, ModelSpec, TrainConfig
from ..contracts.validation_contracts import BaselineResult, BaselineSplit
from ..nn.network import Network
from ..nn.training import Dataset, train
from ..synthgen.degradation import EOL_CAPACITY_RATIO
from ..windows.sliding import window_tensor
from .metrics import MAPE_FLOOR, series_metrics

logger = logging.getLogger(__name__)

CAPACITY_CHANNEL = "discharge_capacity"
_RESIDUAL_TOLERANCE = 1e-9


def baseline_split(cell: CellHistory, q: float = 0.4, n_w: int = 50) -> BaselineSplit:
    """Input = cycles 1..floor(q * eol), target = the rest."""
    if not 0.0 < q < 1.0:
        raise ConfigError(ErrorCode.CONFIG_INVALID, "q must be in (0, 1)", q=q)
    input_end = math.floor(exact_fraction(q) * cell.eol)
    if input_end < n_w:
        raise DataError(
            ErrorCode.CELL_TOO_SHORT,
            f"input segment has {input_end} cycles, fewer than the window size {n_w}",
            cell_id=cell.cell_id, q=q,
        )
    return BaselineSplit(cell_id=cell.cell_id, q=q, input_end=input_end, eol=cell.eol)


def extrapolation_weights(n_w: int) -> np.ndarray:
    """Weights c such that window @ c is the least-squares line through the window evaluated one step ahead."""
    design = np.column_stack([np.ones(n_w), np.arange(n_w, dtype=np.float64)])
    return np.array([1.0, float(n_w)]) @ np.linalg.pinv(design)


@dataclass(frozen=True, eq=False)
class CapacityForecaster:
    """Fitted one-step forecaster for one cell."""
    n_w: int
    weights: np.ndarray
    scale: float
    residual_std: float
    network: Optional[Network] = None

    def _inputs(self, windows: np.ndarray) -> np.ndarray:
        # (B, n_w) -> (B, 1, n_w), centered on each window's last value
        return ((windows - windows[:, -1:]) / self.scale)[:, None, :]

    def step(self, windows: np.ndarray) -> np.ndarray:
        linear = windows @ self.weights
        if self.network is None:
            return linear
        return linear + self.residual_std * self.network.predict(self._inputs(windows))

    def rollout(self, history: np.ndarray, horizon: int) -> np.ndarray:
        values = list(np.asarray(history, dtype=np.float64))
        for _ in range(horizon):
            window = np.array(values[-self.n_w:])[None, :]
            values.append(float(self.step(window)[0]))
        return np.array(values[len(history):])


def fit_forecaster(
    series: np.ndarray,
    n_w: int = 50,
    config: TrainConfig = TrainConfig(),
    architecture: Optional[ModelSpec] = None,
) -> CapacityForecaster:
    series = np.asarray(series, dtype=np.float64)
    weights = extrapolation_weights(n_w)
    level = max(1.0, float(np.max(np.abs(series))))
    scale = float(np.std(np.diff(series))) if series.size > 1 else 0.0
    scale = scale if scale > _RESIDUAL_TOLERANCE * level else 1.0

    windows = window_tensor(series[None, :-1], n_w)[:, 0, :]     # (N, n_w)
    if windows.shape[0] < 2:
        logger.info("Baseline: %d training windows, using pure extrapolation", windows.shape[0])
        return CapacityForecaster(n_w=n_w, weights=weights, scale=scale, residual_std=0.0)

    residuals = series[n_w:] - windows @ weights
    residual_std = float(np.std(residuals))
    if residual_std <= _RESIDUAL_TOLERANCE * level:
        return CapacityForecaster(n_w=n_w, weights=weights, scale=scale, residual_std=0.0)

    forecaster = CapacityForecaster(n_w=n_w, weights=weights, scale=scale, residual_std=residual_std)
    inputs = forecaster._inputs(windows)
    targets = residuals / residual_std
    # chronological hold-out: the latest windows validate
    n_val = min(max(1, int(round(config.validation_fraction * len(targets)))), len(targets) - 1)
    train_set = Dataset(inputs=inputs[:-n_val], targets=targets[:-n_val])
    val_set = Dataset(inputs=inputs[-n_val:], targets=targets[-n_val:])

    spec = replace(architecture or ModelSpec(n_features=1),
                   n_features=1, n_w=n_w, head=HeadType.FORECAST)
    network = Network(spec, seed=config.seed)
    train(network, train_set, val_set, LossType.MSE, config, stage="baseline")
    return replace(forecaster, network=network)


def baseline_forecast(
    cell: CellHistory,
    split: BaselineSplit,
    config: TrainConfig = TrainConfig(),
    n_w: int = 50,
    architecture: Optional[ModelSpec] = None,
    overrun: int = 0,
) -> np.ndarray:
    """
    Discharge-capacity forecast aligned to the target cycles (length eol - input_end),
    continued `overrun` cycles past EOL so a late EOL crossing can still be found.
    """
    if split.cell_id != cell.cell_id or split.eol != cell.eol:
        raise DataError(ErrorCode.RECORD_INVARIANT, "split belongs to a different cell", cell_id=cell.cell_id)
    if overrun < 0:
        raise ConfigError(ErrorCode.CONFIG_INVALID, "overrun must be >= 0", overrun=overrun)
    history = cell.channel(CAPACITY_CHANNEL)[:split.input_end]
    forecaster = fit_forecaster(history, n_w, config, architecture)
    return forecaster.rollout(history, split.horizon + overrun)


def forecast_eol(cell: CellHistory, split: BaselineSplit, forecast: np.ndarray) -> Tuple[int, bool]:
    """
    (predicted EOL cycle, censored): first forecast cycle at or below
    EOL_CAPACITY_RATIO of the cycle-1 capacity, else the last forecast cycle.
    """
    threshold = EOL_CAPACITY_RATIO * float(cell.channel(CAPACITY_CHANNEL)[0])
    crossed = np.flatnonzero(np.asarray(forecast) <= threshold)
    if crossed.size:
        return split.input_end + 1 + int(crossed[0]), False
    return split.input_end + int(len(forecast)), True


def rul_fraction(split: BaselineSplit, eol: int) -> np.ndarray:
    """(eol - t) / (eol - input_end) over the target cycles, clipped to [0, 1]."""
    t = np.arange(split.input_end + 1, split.eol + 1, dtype=np.float64)
    return np.clip((eol - t) / (eol - split.input_end), 0.0, 1.0)


def baseline_metrics(
    cell: CellHistory,
    split: BaselineSplit,
    forecast: np.ndarray,
    mape_floor: float = MAPE_FLOOR,
) -> BaselineResult:
    """
    Capacity metrics over the target segment, plus RUL-fraction metrics
    anchored at the last input cycle, on the same scale as the two-stage curves.
    """
    forecast = np.asarray(forecast, dtype=np.float64)
    if forecast.size < split.horizon:
        raise DataError(ErrorCode.SHAPE_MISMATCH, "forecast is shorter than the target segment",
                        cell_id=cell.cell_id, forecast=forecast.size, horizon=split.horizon)
    aligned = forecast[:split.horizon]
    truth = cell.channel(CAPACITY_CHANNEL)[split.input_end:]
    predicted_eol, censored = forecast_eol(cell, split, forecast)
    return BaselineResult(
        cell_id=cell.cell_id,
        split=split,
        forecast=tuple(float(v) for v in aligned),
        metrics=series_metrics(aligned, truth, mape_floor),
        predicted_eol=predicted_eol,
        eol_censored=censored,
        rul_metrics=series_metrics(rul_fraction(split, predicted_eol), rul_fraction(split, split.eol), mape_floor),
    )
