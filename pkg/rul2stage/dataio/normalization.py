"""
Channel Normalization

Z-score statistics pooled over training cycles and their application to
any cell. Statistics are computed on training cells only and reused for
validation/test cells.
"""

from __future__ import annotations
from typing import Sequence, Union

import numpy as np

from ..contracts.base import DataError, ErrorCode
from ..contracts.data_contracts import (
    CellHistory, FeatureSelection, NormalizationStats, NormalizedCell,
)


def compute_normalization(
    cells: Sequence[CellHistory],
    selection: FeatureSelection
) -> NormalizationStats:
    """Population mean/std per selected channel over all cycles of `cells`."""
    if not cells:
        raise DataError(ErrorCode.EMPTY_INPUT, "cannot compute statistics of an empty fleet")
    means, stds = [], []
    for name in selection.channels:
        pooled = np.concatenate([cell.channel(name) for cell in cells])
        std = float(np.std(pooled))
        if not std > 0:
            raise DataError(ErrorCode.ZERO_VARIANCE, "channel has zero variance", channel=name)
        means.append(float(np.mean(pooled)))
        stds.append(std)
    return NormalizationStats(channels=selection.channels, means=tuple(means), stds=tuple(stds))


def apply_normalization(
    cell: CellHistory,
    stats: NormalizationStats,
    selection: FeatureSelection
) -> NormalizedCell:
    """(v - mean) / std for each selected channel; unselected channels are dropped."""
    means, stds = stats.vectors(selection)
    values = (cell.channel_matrix(selection) - means) / stds
    return NormalizedCell(cell_id=cell.cell_id, selection=selection, values=values)


def denormalize(
    cell: Union[NormalizedCell, np.ndarray],
    stats: NormalizationStats,
    selection: FeatureSelection
) -> np.ndarray:
    """Inverse of apply_normalization: an (n_f, eol) matrix in physical units."""
    values = cell.values if isinstance(cell, NormalizedCell) else np.asarray(cell, dtype=np.float64)
    means, stds = stats.vectors(selection)
    return values * stds + means
