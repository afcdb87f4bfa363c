"""
Windowing & Labeling Layer

RESPONSIBILITY: Cell -> window samples, plus stage-1 and stage-2 labels
ALLOWED INPUTS: CellHistory or NormalizedCell, FeatureSelection
OUTPUTS: WindowSample lists, (window, HSLabel) and (window, RULTarget) pairs

Pure transformations; output order is by start cycle.
"""

from .labels import (
    assign_hs_labels, assign_rul_targets, healthy_limit, hs_label,
    labels_feasible, unhealthy_from,
)
from .sliding import anchors, make_windows, stack_features, window_count, window_tensor

__all__ = [
    'make_windows', 'window_count', 'window_tensor', 'stack_features', 'anchors',
    'assign_hs_labels', 'assign_rul_targets', 'healthy_limit', 'unhealthy_from',
    'labels_feasible', 'hs_label',
]
