"""
Stage Model Base

A trained network bundled with the FeatureSelection and NormalizationStats
it was trained with. Both stages share this shape; the head type tells
them apart.

INVARIANTS:
===========
- network.spec.n_features == selection.count
- stats cover every selected channel
- raw CellHistory in, normalized windows out: callers never normalize
"""

from __future__ import annotations
from dataclasses import dataclass
from pathlib import Path
from typing import ClassVar, Mapping, Optional, Tuple, Union

import numpy as np

from ..contracts.base import ConfigError, DataError, ErrorCode
from ..contracts.data_contracts import CellHistory, FeatureSelection, NormalizationStats
from ..contracts.model_contracts import HeadType, TrainingHistory
from ..dataio.normalization import apply_normalization
from ..nn.checkpoint import load_checkpoint, save_checkpoint
from ..nn.network import Network
from ..windows.sliding import window_tensor


@dataclass(frozen=True, eq=False)
class StageModel:
    network: Network
    selection: FeatureSelection
    stats: NormalizationStats
    history: Optional[TrainingHistory] = None

    HEAD: ClassVar[HeadType]

    def __post_init__(self):
        spec = self.network.spec
        if spec.head is not self.HEAD:
            raise ConfigError(ErrorCode.INCOMPATIBLE_MODELS,
                              f"expected a {self.HEAD.value} head, found {spec.head.value}")
        if spec.n_features != self.selection.count:
            raise ConfigError(ErrorCode.INCOMPATIBLE_MODELS,
                              f"network reads {spec.n_features} channels, selection has {self.selection.count}")
        self.stats.vectors(self.selection)

    @property
    def n_w(self) -> int:
        return self.network.spec.n_w

    def check_selection(self, selection: FeatureSelection) -> None:
        if selection != self.selection:
            raise DataError(
                ErrorCode.SHAPE_MISMATCH,
                "feature selection differs from the one the model was trained with",
                expected=",".join(self.selection.channels), found=",".join(selection.channels),
            )

    def cell_windows(self, cell: CellHistory) -> Tuple[np.ndarray, np.ndarray]:
        """(anchor cycles, normalized window tensor) for every step-1 window of `cell`."""
        if cell.eol < self.n_w:
            raise DataError(ErrorCode.CELL_TOO_SHORT,
                            f"cell has {cell.eol} cycles, fewer than the window size {self.n_w}",
                            cell_id=cell.cell_id)
        normalized = apply_normalization(cell, self.stats, self.selection)
        tensor = window_tensor(normalized.values, self.n_w)
        anchors = np.arange(self.n_w, cell.eol + 1, dtype=np.int64)
        return anchors, tensor

    def predict_cell(self, cell: CellHistory, batch_size: int = 512) -> Tuple[np.ndarray, np.ndarray]:
        """(anchor cycles, raw network outputs) over the whole cell."""
        anchors, tensor = self.cell_windows(cell)
        return anchors, self.network.predict(tensor, batch_size)

    def save(self, path: Union[str, Path], metadata: Optional[Mapping[str, object]] = None) -> Path:
        meta = {"stage": self.HEAD.value}
        if self.history is not None:
            meta.update(best_epoch=self.history.best_epoch,
                        best_val_loss=repr(self.history.best_val_loss),
                        epochs_run=self.history.epochs_run)
        meta.update(metadata or {})
        return save_checkpoint(path, self.network.spec, self.network.params,
                               selection=self.selection, stats=self.stats, metadata=meta)

    @classmethod
    def load(cls, path: Union[str, Path]):
        ckpt = load_checkpoint(path)
        if ckpt.selection is None or ckpt.stats is None:
            raise ConfigError(ErrorCode.INCOMPATIBLE_MODELS,
                              "checkpoint carries no feature selection or normalization", file=path)
        return cls(network=Network(ckpt.spec, ckpt.params), selection=ckpt.selection, stats=ckpt.stats)


def check_compatible(first: StageModel, second: StageModel) -> None:
    """Both stages must read the same channels with the same scaling and window size."""
    if first.selection != second.selection or first.stats != second.stats or first.n_w != second.n_w:
        raise ConfigError(
            ErrorCode.INCOMPATIBLE_MODELS,
            "models were trained with different selections, normalization or window sizes",
        )
