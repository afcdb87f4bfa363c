"""
Evaluation Layer

RESPONSIBILITY: Per-cell and fleet metrics, the conventional-scheme
baseline harness, report/CSV/SVG emission
ALLOWED INPUTS: Trained stage models, test cells
OUTPUTS: MetricsReport, BaselineResult, files under an output directory

Rows are always ordered by cell_id; aggregates cover triggered cells only.
"""

from .baseline import (
    CapacityForecaster, baseline_forecast, baseline_metrics, baseline_split,
    extrapolation_weights, fit_forecaster, forecast_eol, rul_fraction,
)
from .fleet import evaluate_cell, evaluate_fleet
from .metrics import MAPE_FLOOR, aggregate_metrics, compute_metrics, series_metrics
from .report import (
    baseline_to_frame, read_report, report_lines, report_to_frame,
    write_curve_plot, write_report, write_table, write_trace_plot,
)

__all__ = [
    'MAPE_FLOOR', 'compute_metrics', 'series_metrics', 'aggregate_metrics',
    'evaluate_cell', 'evaluate_fleet',
    'baseline_split', 'baseline_forecast', 'baseline_metrics', 'fit_forecaster',
    'extrapolation_weights', 'CapacityForecaster', 'forecast_eol', 'rul_fraction',
    'write_report', 'write_curve_plot', 'write_trace_plot', 'write_table', 'read_report',
    'report_lines', 'report_to_frame', 'baseline_to_frame',
]
