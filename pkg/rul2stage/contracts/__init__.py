"""
Contracts Package

Immutable types shared by every layer. Layers import from here and never
from each other's internals.
"""

from .base import (
    ConfigError, DataError, Error, ErrorCode, NumericError, PipelineError,
    exact_fraction,
)
from .data_contracts import (
    CHANNELS, CSV_COLUMNS, CellHistory, CycleRecord, FeatureSelection,
    HSLabel, NormalizationStats, NormalizedCell, RULTarget, WindowSample,
)
from .model_contracts import (
    Activation, EpochRecord, HeadType, LossType, ModelSpec, TrainConfig,
    TrainingHistory,
)
from .inference_contracts import CurvePoint, FPCDecision, RULCurve
from .validation_contracts import (
    AggregateMetrics, BaselineResult, BaselineSplit, CellMetrics,
    CellReportRow, MetricsReport,
)

__all__ = [
    'ConfigError', 'DataError', 'Error', 'ErrorCode', 'NumericError',
    'PipelineError', 'exact_fraction',
    'CHANNELS', 'CSV_COLUMNS', 'CellHistory', 'CycleRecord',
    'FeatureSelection', 'HSLabel', 'NormalizationStats', 'NormalizedCell',
    'RULTarget', 'WindowSample',
    'Activation', 'EpochRecord', 'HeadType', 'LossType', 'ModelSpec',
    'TrainConfig', 'TrainingHistory',
    'CurvePoint', 'FPCDecision', 'RULCurve',
    'AggregateMetrics', 'BaselineResult', 'BaselineSplit', 'CellMetrics',
    'CellReportRow', 'MetricsReport',
]
