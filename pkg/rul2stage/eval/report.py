"""
Report Emission

Static output files only:
- report.txt     key=value metrics report (parse back with read_report)
- metrics.csv    one row per cell
- fpc_decisions.csv, traces/<cell_id>.csv, curves/<cell_id>.csv (triggered
  cells only)
- plots/<cell_id>.svg  prediction vs target over anchor cycle; for an
  untriggered cell, its HS probability trace

Floats are written with 17 significant digits and no timestamps, so
reruns are byte-identical.
"""

from __future__ import annotations
from pathlib import Path
from typing import Dict, List, Sequence, Union

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
from dotenv import dotenv_values

from ..contracts.inference_contracts import FPCDecision, RULCurve
from ..contracts.validation_contracts import BaselineResult, MetricsReport
from ..fpc.export import decisions_to_frame, trace_to_frame
from ..fpc.hs_model import DECISION_THRESHOLD
from ..rulpred.rul_model import curve_to_frame

FLOAT_FORMAT = "%.17g"
REPORT_NAME = "report.txt"
METRICS_NAME = "metrics.csv"

matplotlib.rcParams["svg.hashsalt"] = "rul2stage"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


# =============================================================================
# TABLES
# =============================================================================

def report_to_frame(report: MetricsReport) -> pd.DataFrame:
    rows = []
    for r in report.rows:
        m = r.metrics
        rows.append({
            "cell_id": r.cell_id,
            "eol": r.eol,
            "fpc_cycle": r.fpc_cycle,
            "triggered": r.triggered,
            "mse": m.mse if m else None,
            "mae": m.mae if m else None,
            "mape": m.mape if m else None,
            "n_points": m.n_points if m else None,
        })
    frame = pd.DataFrame(rows, columns=["cell_id", "eol", "fpc_cycle", "triggered",
                                        "mse", "mae", "mape", "n_points"])
    frame["fpc_cycle"] = frame["fpc_cycle"].astype("Int64")
    frame["n_points"] = frame["n_points"].astype("Int64")
    return frame


BASELINE_COLUMNS = [
    "cell_id", "eol", "input_end", "horizon", "mse", "mae", "mape",
    "predicted_eol", "eol_censored", "rul_mse", "rul_mae", "rul_mape",
]


def baseline_to_frame(results: Sequence[BaselineResult]) -> pd.DataFrame:
    """One row per cell: capacity metrics (Ah scale), then RUL-fraction metrics."""
    return pd.DataFrame([{
        "cell_id": r.cell_id,
        "eol": r.split.eol,
        "input_end": r.split.input_end,
        "horizon": r.split.horizon,
        "mse": r.metrics.mse,
        "mae": r.metrics.mae,
        "mape": r.metrics.mape,
        "predicted_eol": r.predicted_eol,
        "eol_censored": r.eol_censored,
        "rul_mse": r.rul_metrics.mse,
        "rul_mae": r.rul_metrics.mae,
        "rul_mape": r.rul_metrics.mape,
    } for r in results], columns=BASELINE_COLUMNS)


def write_table(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    return _write_csv(frame, Path(path))


# =============================================================================
# KEY-VALUE REPORT
# =============================================================================

def report_lines(report: MetricsReport) -> List[str]:
    agg = report.aggregate
    lines = [
        "# rul2stage metrics report",
        "# aggregate = unweighted mean of per-cell metrics over triggered cells",
        f"aggregate.mse={_fmt(agg.mse if agg else None)}",
        f"aggregate.mae={_fmt(agg.mae if agg else None)}",
        f"aggregate.mape={_fmt(agg.mape if agg else None)}",
        f"aggregate.n_cells={agg.n_cells if agg else 0}",
        f"cells.total={len(report.rows)}",
        f"cells.untriggered={len(report.untriggered)}",
        f"untriggered={','.join(report.untriggered)}",
    ]
    for r in report.rows:
        prefix = f"cell.{r.cell_id}"
        lines.append(f"{prefix}.eol={r.eol}")
        lines.append(f"{prefix}.fpc_cycle={_fmt(r.fpc_cycle)}")
        lines.append(f"{prefix}.triggered={str(r.triggered).lower()}")
        if r.metrics is not None:
            lines.append(f"{prefix}.mse={_fmt(r.metrics.mse)}")
            lines.append(f"{prefix}.mae={_fmt(r.metrics.mae)}")
            lines.append(f"{prefix}.mape={_fmt(r.metrics.mape)}")
            lines.append(f"{prefix}.n_points={r.metrics.n_points}")
    return lines


def read_report(path: Union[str, Path]) -> Dict[str, str]:
    """Parse a report.txt back into a flat dict; empty values mean absent."""
    return {k: (v or "") for k, v in dotenv_values(path, interpolate=False).items()}


# =============================================================================
# PLOTS
# =============================================================================

def write_curve_plot(curve: RULCurve, path: Union[str, Path]) -> Path:
    """SVG line chart of predicted vs target RUL fraction over anchor cycle."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    anchors = [p.anchor_cycle for p in curve.points]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(anchors, [p.prediction for p in curve.points], label="prediction")
    if curve.has_targets:
        ax.plot(anchors, [p.target for p in curve.points], linestyle="--", label="target")
    ax.axvline(curve.fpc_cycle, color="grey", linewidth=0.8, label="FPC")
    ax.set_xlabel("cycle")
    ax.set_ylabel("RUL fraction")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(curve.cell_id)
    ax.legend(loc="upper right")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def write_trace_plot(decision: FPCDecision, path: Union[str, Path]) -> Path:
    """SVG of the HS probability per anchor cycle, for cells without a curve."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([a for a, _ in decision.trace], [p for _, p in decision.trace], label="P(unhealthy)")
    ax.axhline(DECISION_THRESHOLD, color="grey", linewidth=0.8, linestyle=":", label="threshold")
    ax.set_xlabel("cycle")
    ax.set_ylabel("probability")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(f"{decision.cell_id} (untriggered)" if not decision.triggered else decision.cell_id)
    ax.legend(loc="upper left")
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# =============================================================================
# ALL ARTIFACTS
# =============================================================================

def write_report(
    report: MetricsReport,
    out_dir: Union[str, Path],
    plots: bool = True,
    traces: bool = True,
) -> List[Path]:
    """Write every evaluation artifact under out_dir; returns the written paths in order."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    report_path = out_dir / REPORT_NAME
    report_path.write_text("\n".join(report_lines(report)) + "\n", encoding="utf-8")
    written.append(report_path)
    written.append(_write_csv(report_to_frame(report), out_dir / METRICS_NAME))
    if report.decisions:
        written.append(_write_csv(decisions_to_frame(report.decisions), out_dir / "fpc_decisions.csv"))
    for curve in report.curves:
        written.append(_write_csv(curve_to_frame(curve), out_dir / "curves" / f"{curve.cell_id}.csv"))
        if plots:
            written.append(write_curve_plot(curve, out_dir / "plots" / f"{curve.cell_id}.svg"))
    if plots:
        # untriggered cells have no curve; their plot is the probability trace
        for decision in report.decisions:
            if not decision.triggered:
                written.append(write_trace_plot(decision, out_dir / "plots" / f"{decision.cell_id}.svg"))
    if traces:
        for decision in report.decisions:
            written.append(_write_csv(trace_to_frame(decision), out_dir / "traces" / f"{decision.cell_id}.csv"))
    return written
