"""
Stage 2: RUL Prediction

RESPONSIBILITY: Train the RUL regressor on post-FPC windows, predict
per-cell RUL fraction curves
ALLOWED INPUTS: CellHistory values, FPC decisions from stage 1
OUTPUTS: RULModel, RULCurve

Test-time FPCs always come from the stage-1 model, never from ground truth.
"""

from .rul_model import RULModel, curve_to_frame, predict_curve, rul_windows, train_rul

__all__ = ['RULModel', 'train_rul', 'predict_curve', 'curve_to_frame', 'rul_windows']
