"""
Stage 1: Health-State Division & FPC

RESPONSIBILITY: Train the health-state classifier, locate each cell's FPC
ALLOWED INPUTS: Raw CellHistory values, FeatureSelection
OUTPUTS: HSModel, FPCDecision

MUST NOT: guess an FPC for a cell that never triggers.
"""

from .export import decisions_to_frame, trace_to_frame
from .hs_model import (
    DECISION_THRESHOLD, HSModel, classify, infeasible_cells, is_unhealthy,
    labeled_accuracy, labeled_windows, train_hs,
)
from .stage_model import StageModel, check_compatible
from .trigger import decide_fpc, decision_from_trace, first_run_start

__all__ = [
    'HSModel', 'StageModel', 'check_compatible', 'train_hs', 'classify', 'is_unhealthy',
    'labeled_windows', 'labeled_accuracy', 'infeasible_cells', 'DECISION_THRESHOLD',
    'first_run_start', 'decision_from_trace', 'decide_fpc',
    'decisions_to_frame', 'trace_to_frame',
]
