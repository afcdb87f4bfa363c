"""
Data I/O Layer

RESPONSIBILITY: Load, validate, normalize and split per-cell cycle data
OUTPUTS: CellHistory, NormalizationStats, NormalizedCell, fleet partitions

MUST NOT: window, label or train.
"""

from .csv_store import (
    MANIFEST_NAME, cell_to_frame, load_cells, read_cell_csv, read_manifest,
    resolve_sources, save_cells, write_manifest,
)
from .normalization import apply_normalization, compute_normalization, denormalize
from .split import split_train_test, split_validation_cells

__all__ = [
    'MANIFEST_NAME', 'cell_to_frame', 'load_cells', 'read_cell_csv',
    'read_manifest', 'resolve_sources', 'save_cells', 'write_manifest',
    'apply_normalization', 'compute_normalization', 'denormalize',
    'split_train_test', 'split_validation_cells',
]
