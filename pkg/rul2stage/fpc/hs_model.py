"""
Health-State Model (stage 1)

Trains the logistic-head network on automatically labeled windows: the
first p of each training cell is Healthy, the last p is Unhealthy and
everything in between is left out of training.
"""

from __future__ import annotations
from dataclasses import replace
from typing import ClassVar, List, Optional, Sequence, Tuple
import logging

import numpy as np

from ..contracts.base import DataError, ErrorCode
from ..contracts.data_contracts import (
    CellHistory, FeatureSelection, HSLabel, NormalizationStats, WindowSample,
)
from ..contracts.model_contracts import HeadType, LossType, ModelSpec, TrainConfig
from ..dataio.normalization import apply_normalization, compute_normalization
from ..dataio.split import split_validation_cells
from ..nn.network import Network
from ..nn.training import Dataset, train
from ..observability import MetricsCollector
from ..windows.labels import assign_hs_labels, labels_feasible
from ..windows.sliding import make_windows
from .stage_model import StageModel

logger = logging.getLogger(__name__)

DECISION_THRESHOLD = 0.5


class HSModel(StageModel):
    """Logistic-head stage model; outputs are unhealthy probabilities."""
    HEAD: ClassVar[HeadType] = HeadType.HS

    def probabilities(self, cell: CellHistory) -> Tuple[np.ndarray, np.ndarray]:
        """(anchor cycles, unhealthy probability) for every window of `cell`."""
        return self.predict_cell(cell)


def is_unhealthy(probability: float) -> bool:
    """Ties at exactly 0.5 count as Healthy."""
    return probability > DECISION_THRESHOLD


def classify(model: HSModel, window: WindowSample) -> Tuple[HSLabel, float]:
    """Classify one window whose features are already normalized with model.stats."""
    probability = float(model.network.forward(window.features)[0][0])
    label = HSLabel.UNHEALTHY if is_unhealthy(probability) else HSLabel.HEALTHY
    return label, probability


# =============================================================================
# TRAINING DATA
# =============================================================================

def infeasible_cells(cells: Sequence[CellHistory], n_w: int, p: float) -> List[str]:
    return [c.cell_id for c in cells if c.eol < n_w or not labels_feasible(c.eol, n_w, p)]


def labeled_windows(
    cells: Sequence[CellHistory],
    selection: FeatureSelection,
    stats: NormalizationStats,
    n_w: int,
    p: float,
    step: int = 1,
) -> Dataset:
    """Healthy/Unhealthy windows of `cells` as a Dataset; Unlabeled windows are dropped."""
    inputs, targets = [], []
    for cell in cells:
        windows = make_windows(apply_normalization(cell, stats, selection), selection, n_w, step)
        for window, label in assign_hs_labels(windows, cell.eol, p):
            if label is not HSLabel.UNLABELED:
                inputs.append(window.features)
                targets.append(float(label.value))
    if not inputs:
        raise DataError(ErrorCode.EMPTY_INPUT, "no labeled windows")
    return Dataset(inputs=np.stack(inputs), targets=np.array(targets))


def train_hs(
    train_cells: Sequence[CellHistory],
    selection: FeatureSelection,
    p: float = 0.10,
    config: TrainConfig = TrainConfig(),
    n_w: int = 50,
    step: int = 1,
    architecture: Optional[ModelSpec] = None,
    stats: Optional[NormalizationStats] = None,
    metrics: Optional[MetricsCollector] = None,
) -> HSModel:
    """
    Fit the health-state classifier with BCE.

    Normalization statistics come from `train_cells` unless given; early
    stopping holds out whole cells (config.validation_fraction).
    """
    if not train_cells:
        raise DataError(ErrorCode.EMPTY_INPUT, "no training cells for the health-state model")
    offending = infeasible_cells(train_cells, n_w, p)
    if offending:
        raise DataError(ErrorCode.LABELING_INFEASIBLE,
                        "healthy and unhealthy regions overlap or cells are shorter than a window",
                        cells=",".join(offending), p=p, n_w=n_w)

    stats = stats or compute_normalization(train_cells, selection)
    fit_cells, val_cells = split_validation_cells(train_cells, config.validation_fraction, config.seed)
    train_set = labeled_windows(fit_cells, selection, stats, n_w, p, step)
    val_set = labeled_windows(val_cells, selection, stats, n_w, p, step)
    logger.info("Health-state data: %d labeled windows from %d cells, %d validation windows",
                len(train_set), len(fit_cells), len(val_set))

    spec = replace(architecture or ModelSpec(n_features=selection.count),
                   n_features=selection.count, n_w=n_w, head=HeadType.HS)
    network = Network(spec, seed=config.seed)
    _, history = train(network, train_set, val_set, LossType.BCE, config, metrics, stage="hs")
    return HSModel(network=network, selection=selection, stats=stats, history=history)


def labeled_accuracy(model: HSModel, cells: Sequence[CellHistory], p: float = 0.10) -> float:
    """Share of Healthy/Unhealthy-labeled windows of `cells` that the model classifies correctly."""
    data = labeled_windows(cells, model.selection, model.stats, model.n_w, p)
    predicted = model.network.predict(data.inputs) > DECISION_THRESHOLD
    return float(np.mean(predicted == (data.targets == 1.0)))
