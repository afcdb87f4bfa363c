"""
Loss Functions

Each loss returns (mean loss, dLoss/dPrediction). Gradients are already
divided by the batch size, so they feed Network.backward() directly.
"""

from __future__ import annotations
from typing import Callable, Dict, Tuple

import numpy as np

from ..contracts.base import DataError, ErrorCode
from ..contracts.model_contracts import LossType

BCE_EPSILON = 1e-12

LossFn = Callable[[np.ndarray, np.ndarray], Tuple[float, np.ndarray]]


def _pair(predictions, targets) -> Tuple[np.ndarray, np.ndarray]:
    y_hat = np.atleast_1d(np.asarray(predictions, dtype=np.float64))
    y = np.atleast_1d(np.asarray(targets, dtype=np.float64))
    if y_hat.size == 0:
        raise DataError(ErrorCode.EMPTY_INPUT, "loss over an empty batch")
    if y_hat.shape != y.shape:
        raise DataError(ErrorCode.SHAPE_MISMATCH, f"predictions {y_hat.shape} vs targets {y.shape}")
    return y_hat, y


def bce_loss(predictions, labels) -> Tuple[float, np.ndarray]:
    """
    Binary cross entropy, -[y log p + (1 - y) log(1 - p)], averaged.

    Predictions are clamped to [1e-12, 1 - 1e-12] before the logs.
    """
    y_hat, y = _pair(predictions, labels)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DataError(ErrorCode.INVALID_LABEL, "BCE labels must be 0 or 1")
    p = np.clip(y_hat, BCE_EPSILON, 1.0 - BCE_EPSILON)
    n = y.size
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    grad = (-y / p + (1.0 - y) / (1.0 - p)) / n
    return float(loss), grad


def mae_loss(predictions, targets) -> Tuple[float, np.ndarray]:
    """Mean absolute error; subgradient sign(y_hat - y) / n, 0 at ties."""
    y_hat, y = _pair(predictions, targets)
    diff = y_hat - y
    return float(np.mean(np.abs(diff))), np.sign(diff) / y.size


def mse_loss(predictions, targets) -> Tuple[float, np.ndarray]:
    y_hat, y = _pair(predictions, targets)
    diff = y_hat - y
    return float(np.mean(diff * diff)), 2.0 * diff / y.size


LOSSES: Dict[LossType, LossFn] = {
    LossType.BCE: bce_loss,
    LossType.MAE: mae_loss,
    LossType.MSE: mse_loss,
}
