"""
RUL Model (stage 2)

Regresses the remaining-life fraction from windows anchored at or after
each cell's FPC. Post-FPC windows of all triggered training cells are
pooled into one dataset.
"""

from __future__ import annotations
from dataclasses import replace
from typing import ClassVar, Dict, Mapping, Optional, Sequence, Tuple, Union
import logging

import numpy as np
import pandas as pd

from ..contracts.base import DataError, ErrorCode
from ..contracts.data_contracts import CellHistory, FeatureSelection, NormalizationStats
from ..contracts.inference_contracts import CurvePoint, FPCDecision, RULCurve
from ..contracts.model_contracts import HeadType, LossType, ModelSpec, TrainConfig
from ..dataio.normalization import apply_normalization, compute_normalization
from ..dataio.split import split_validation_cells
from ..fpc.stage_model import StageModel
from ..nn.network import Network
from ..nn.training import Dataset, train
from ..observability import MetricsCollector
from ..windows.labels import assign_rul_targets
from ..windows.sliding import make_windows

logger = logging.getLogger(__name__)

Decisions = Union[Mapping[str, FPCDecision], Sequence[FPCDecision]]


class RULModel(StageModel):
    """Rectifier-head stage model; raw outputs are >= 0."""
    HEAD: ClassVar[HeadType] = HeadType.RUL


def _by_cell(decisions: Decisions) -> Dict[str, FPCDecision]:
    if isinstance(decisions, Mapping):
        return dict(decisions)
    return {d.cell_id: d for d in decisions}


def rul_windows(
    cells: Sequence[CellHistory],
    fpcs: Mapping[str, int],
    selection: FeatureSelection,
    stats: NormalizationStats,
    n_w: int,
    step: int = 1,
) -> Dataset:
    """Post-FPC windows with their RUL fractions, pooled over `cells`."""
    inputs, targets = [], []
    for cell in cells:
        windows = make_windows(apply_normalization(cell, stats, selection), selection, n_w, step)
        for window, target in assign_rul_targets(windows, cell.eol, fpcs[cell.cell_id]):
            inputs.append(window.features)
            targets.append(target.fraction)
    if not inputs:
        raise DataError(ErrorCode.EMPTY_INPUT, "no post-FPC windows")
    return Dataset(inputs=np.stack(inputs), targets=np.array(targets))


def _hold_out_windows(data: Dataset, fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """Window-level hold-out, used only when a single cell triggered."""
    n = len(data)
    if n < 2:
        raise DataError(ErrorCode.INVALID_SPLIT, "a single post-FPC window cannot be split for validation")
    n_val = min(max(1, int(round(fraction * n))), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    val, fit = np.sort(order[:n_val]), np.sort(order[n_val:])
    return (Dataset(inputs=data.inputs[fit], targets=data.targets[fit]),
            Dataset(inputs=data.inputs[val], targets=data.targets[val]))


def train_rul(
    train_cells: Sequence[CellHistory],
    decisions: Decisions,
    selection: FeatureSelection,
    config: TrainConfig = TrainConfig(),
    n_w: int = 50,
    step: int = 1,
    architecture: Optional[ModelSpec] = None,
    stats: Optional[NormalizationStats] = None,
    metrics: Optional[MetricsCollector] = None,
) -> RULModel:
    """
    Fit the RUL regressor with MAE on the triggered cells' post-FPC windows.

    Pass the stage-1 model's stats so both stages share one scaling.
    """
    by_cell = _by_cell(decisions)
    triggered = [c for c in train_cells if c.cell_id in by_cell and by_cell[c.cell_id].triggered]
    if not triggered:
        raise DataError(ErrorCode.NO_TRIGGERED_CELLS, "no training cell has an FPC")
    fpcs = {c.cell_id: by_cell[c.cell_id].fpc_cycle for c in triggered}
    stats = stats or compute_normalization(train_cells, selection)

    if len(triggered) >= 2:
        fit_cells, val_cells = split_validation_cells(triggered, config.validation_fraction, config.seed)
        train_set = rul_windows(fit_cells, fpcs, selection, stats, n_w, step)
        val_set = rul_windows(val_cells, fpcs, selection, stats, n_w, step)
    else:
        train_set, val_set = _hold_out_windows(
            rul_windows(triggered, fpcs, selection, stats, n_w, step), config.validation_fraction, config.seed
        )
    logger.info("RUL data: %d post-FPC windows from %d triggered cells, %d validation windows",
                len(train_set), len(triggered), len(val_set))

    spec = replace(architecture or ModelSpec(n_features=selection.count),
                   n_features=selection.count, n_w=n_w, head=HeadType.RUL)
    network = Network(spec, seed=config.seed)
    _, history = train(network, train_set, val_set, LossType.MAE, config, metrics, stage="rul")
    return RULModel(network=network, selection=selection, stats=stats, history=history)


def predict_curve(
    model: RULModel,
    cell: CellHistory,
    fpc_cycle: int,
    selection: Optional[FeatureSelection] = None,
    with_targets: bool = True,
) -> RULCurve:
    """
    One prediction per window anchored at or after fpc_cycle.

    Reported values are clamped to [0, 1]; raw rectifier outputs are kept.
    """
    if selection is not None:
        model.check_selection(selection)
    if not 1 <= fpc_cycle < cell.eol:
        raise DataError(ErrorCode.INVALID_FPC, "fpc must satisfy 1 <= fpc < eol",
                        cell_id=cell.cell_id, fpc=fpc_cycle, eol=cell.eol)
    anchors, raw = model.predict_cell(cell)
    keep = anchors >= fpc_cycle
    span = cell.eol - fpc_cycle
    points = tuple(
        CurvePoint(
            anchor_cycle=int(t),
            prediction=float(np.clip(r, 0.0, 1.0)),
            raw_prediction=float(r),
            target=(cell.eol - int(t)) / span if with_targets else None,
        )
        for t, r in zip(anchors[keep], raw[keep])
    )
    return RULCurve(cell_id=cell.cell_id, fpc_cycle=fpc_cycle, points=points)


def curve_to_frame(curve: RULCurve) -> pd.DataFrame:
    """Columns cell_id, anchor_cycle, prediction, target, raw_prediction."""
    return pd.DataFrame({
        "cell_id": curve.cell_id,
        "anchor_cycle": [p.anchor_cycle for p in curve.points],
        "prediction": [p.prediction for p in curve.points],
        "target": [p.target for p in curve.points],
        "raw_prediction": [p.raw_prediction for p in curve.points],
    }, columns=["cell_id", "anchor_cycle", "prediction", "target", "raw_prediction"])
