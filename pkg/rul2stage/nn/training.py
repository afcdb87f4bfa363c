"""
Training Loop

Mini-batch Adam with per-epoch deterministic shuffling and early stopping
on a held-out validation set.

DETERMINISM:
============
- Epoch e shuffles with default_rng([seed, e]); batches keep the last
  partial batch
- No wall-clock, threads or global RNG state, so a fixed seed gives a
  bit-identical parameter trajectory
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple
import logging
import math

import numpy as np
import pandas as pd

from ..contracts.base import DataError, ErrorCode, NumericError
from ..contracts.model_contracts import EpochRecord, LossType, TrainConfig, TrainingHistory
from ..observability import MetricsCollector
from .losses import LOSSES
from .network import Network, Params
from .optim import AdamState, adam_step, clip_gradients

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Stacked network inputs (N, n_f, n_w) and scalar targets (N,)."""
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        if self.inputs.ndim != 3 or self.targets.shape != (self.inputs.shape[0],):
            raise DataError(ErrorCode.SHAPE_MISMATCH, "dataset needs inputs (N, n_f, n_w) and targets (N,)")

    def __len__(self) -> int:
        return int(self.inputs.shape[0])


class EarlyStopping:
    """
    Patience tracker: stop once `patience` consecutive epochs fail to
    improve on the best validation loss.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, epoch: int, loss: float) -> bool:
        """Feed one epoch's validation loss; returns True if it improved."""
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.wait = 0
            return True
        self.wait += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.wait >= self.patience


def _finite(value: float, what: str, epoch: int) -> float:
    if not math.isfinite(value):
        raise NumericError(ErrorCode.NON_FINITE_NUMERIC, f"{what} is not finite", epoch=epoch)
    return value


def evaluate_loss(network: Network, data: Dataset, loss: LossType, batch_size: int = 512) -> float:
    return LOSSES[loss](network.predict(data.inputs, batch_size), data.targets)[0]


def train(
    network: Network,
    train_set: Dataset,
    val_set: Dataset,
    loss: LossType,
    config: TrainConfig = TrainConfig(),
    metrics: Optional[MetricsCollector] = None,
    stage: str = "train",
) -> Tuple[Params, TrainingHistory]:
    """
    Fit `network` in place and leave it holding the best-validation parameters.

    Returns (best params, history).
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise DataError(ErrorCode.EMPTY_INPUT, "training and validation sets must be non-empty",
                        train=len(train_set), validation=len(val_set))
    loss_fn = LOSSES[loss]
    state = AdamState.initial(network.params, config)
    stopper = EarlyStopping(config.patience)
    best_params = network.params
    records = []
    labels: Dict[str, str] = {"stage": stage}
    n = len(train_set)

    logger.info("Training %s: %d train / %d validation samples, loss=%s",
                stage, n, len(val_set), loss.value)

    for epoch in range(1, config.max_epochs + 1):
        order = np.random.default_rng([config.seed, epoch]).permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            out, cache = network.forward(train_set.inputs[idx])
            batch_loss, d_out = loss_fn(out, train_set.targets[idx])
            _finite(batch_loss, "training loss", epoch)
            grads = network.backward(cache, d_out)
            if config.clip_norm is not None:
                grads, _ = clip_gradients(grads, config.clip_norm)
            params, state = adam_step(network.params, grads, state)
            network.set_params(params)
            total += batch_loss * len(idx)

        train_loss = total / n
        val_loss = _finite(evaluate_loss(network, val_set, loss, config.eval_batch_size),
                           "validation loss", epoch)
        improved = stopper.update(epoch, val_loss)
        if improved:
            best_params = network.params
        records.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss, improved=improved))
        if metrics is not None:
            metrics.record("train_loss", train_loss, {**labels, "epoch": str(epoch)})
            metrics.record("val_loss", val_loss, {**labels, "epoch": str(epoch)})
        logger.debug("%s epoch %d: train %.6g val %.6g%s", stage, epoch, train_loss, val_loss,
                     " *" if improved else "")
        if stopper.should_stop:
            break

    network.set_params(best_params)
    history = TrainingHistory(
        loss=loss,
        epochs=tuple(records),
        best_epoch=stopper.best_epoch,
        best_val_loss=stopper.best_loss,
        stopped_early=stopper.should_stop,
        metadata=(("stage", stage), ("train_samples", str(n)), ("val_samples", str(len(val_set)))),
    )
    if metrics is not None:
        metrics.record("best_val_loss", stopper.best_loss, labels)
        metrics.record("epochs_run", len(records), labels)
    logger.info("%s done: %d epochs, best epoch %d (val %.6g)",
                stage, len(records), stopper.best_epoch, stopper.best_loss)
    return best_params, history


def history_to_frame(history: TrainingHistory) -> pd.DataFrame:
    """One row per epoch: epoch, train_loss, val_loss, improved."""
    return pd.DataFrame(
        [(r.epoch, r.train_loss, r.val_loss, r.improved) for r in history.epochs],
        columns=["epoch", "train_loss", "val_loss", "improved"],
    )


TRAINING_METRICS = ("train_loss", "val_loss", "best_val_loss", "epochs_run")
SUMMARY_COLUMNS = ["stage", "metric", "count", "min", "max", "avg", "last"]


def metrics_to_frame(metrics: MetricsCollector, stages: Sequence[str] = ("hs", "rul")) -> pd.DataFrame:
    """
    One row per (stage, metric) that train() recorded into `metrics`:
    count, min, max and mean over epochs, and the final value.
    """
    rows = []
    for stage in stages:
        for name in TRAINING_METRICS:
            labels = {"stage": stage}
            agg = metrics.compute_aggregates(name, labels)
            if not agg:
                continue
            rows.append({
                "stage": stage,
                "metric": name,
                "count": agg["count"],
                "min": agg["min"],
                "max": agg["max"],
                "avg": agg["avg"],
                "last": metrics.get_metric(name, labels)[-1].value,
            })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
