"""
Sliding Windows

Cuts a cell's (n_f, eol) channel matrix into overlapping (n_f, n_w)
windows. Windows never cross cell boundaries and short cells are an
error, not padded.

ANCHORING:
==========
A window starting at cycle s covers cycles s..t with t = s + n_w - 1;
t is the anchor, the cycle the window speaks for.
"""

from __future__ import annotations
from typing import List, Protocol, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..contracts.base import ConfigError, DataError, ErrorCode
from ..contracts.data_contracts import FeatureSelection, WindowSample


class ChannelSource(Protocol):
    """Anything windowable: CellHistory or NormalizedCell."""
    cell_id: str

    @property
    def eol(self) -> int: ...

    def channel_matrix(self, selection: FeatureSelection) -> np.ndarray: ...


def window_count(eol: int, n_w: int, step: int = 1) -> int:
    """floor((eol - n_w) / step) + 1, or 0 when the cell is shorter than n_w."""
    if eol < n_w:
        return 0
    return (eol - n_w) // step + 1


def window_tensor(matrix: np.ndarray, n_w: int, step: int = 1) -> np.ndarray:
    """(n_f, eol) matrix -> read-only (count, n_f, n_w) view."""
    view = sliding_window_view(matrix, n_w, axis=1)      # (n_f, eol - n_w + 1, n_w)
    return view[:, ::step, :].transpose(1, 0, 2)


def make_windows(
    cell: ChannelSource,
    selection: FeatureSelection,
    n_w: int = 50,
    step: int = 1,
) -> List[WindowSample]:
    """Windows at s = 1, 1 + step, ... while s + n_w - 1 <= eol."""
    if n_w < 1 or step < 1:
        raise ConfigError(ErrorCode.CONFIG_INVALID, "n_w and step must be >= 1", n_w=n_w, step=step)
    if cell.eol < n_w:
        raise DataError(
            ErrorCode.CELL_TOO_SHORT,
            f"cell has {cell.eol} cycles, fewer than the window size {n_w}",
            cell_id=cell.cell_id,
        )
    tensor = window_tensor(cell.channel_matrix(selection), n_w, step)
    return [
        WindowSample(cell_id=cell.cell_id, start_cycle=1 + i * step, features=tensor[i])
        for i in range(tensor.shape[0])
    ]


def stack_features(windows: Sequence[WindowSample]) -> np.ndarray:
    """Batch input for the network: (len(windows), n_f, n_w) float64."""
    if not windows:
        raise DataError(ErrorCode.EMPTY_INPUT, "no windows to stack")
    return np.stack([w.features for w in windows]).astype(np.float64, copy=False)


def anchors(windows: Sequence[WindowSample]) -> np.ndarray:
    return np.array([w.anchor_cycle for w in windows], dtype=np.int64)
