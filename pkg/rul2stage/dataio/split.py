"""Deterministic fleet partitioning."""

from __future__ import annotations
from typing import List, Sequence, Tuple

import numpy as np

from ..contracts.base import DataError, ErrorCode
from ..contracts.data_contracts import CellHistory


def _shuffled(cells: Sequence[CellHistory], seed: int) -> List[CellHistory]:
    order = np.random.default_rng(seed).permutation(len(cells))
    return [cells[i] for i in order]


def split_train_test(
    cells: Sequence[CellHistory],
    n_train: int,
    seed: int
) -> Tuple[List[CellHistory], List[CellHistory]]:
    """Seeded shuffle, then the first n_train cells train and the rest test."""
    if not 0 < n_train < len(cells):
        raise DataError(
            ErrorCode.INVALID_SPLIT,
            f"n_train must be in 1..{len(cells) - 1}",
            n_train=n_train, n_cells=len(cells),
        )
    shuffled = _shuffled(cells, seed)
    return shuffled[:n_train], shuffled[n_train:]


def split_validation_cells(
    cells: Sequence[CellHistory],
    fraction: float,
    seed: int
) -> Tuple[List[CellHistory], List[CellHistory]]:
    """
    Hold out round(fraction * n) cells (at least one, leaving at least one)
    for early stopping. Splitting by cell keeps windows of one cell together.
    """
    if len(cells) < 2:
        raise DataError(
            ErrorCode.INVALID_SPLIT,
            "need at least two cells to hold out a validation cell",
            n_cells=len(cells),
        )
    n_val = min(max(1, int(round(fraction * len(cells)))), len(cells) - 1)
    shuffled = _shuffled(cells, seed)
    return shuffled[n_val:], shuffled[:n_val]
