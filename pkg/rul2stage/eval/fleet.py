"""
Fleet Evaluation

Runs the full stage-1 -> trigger -> stage-2 -> metrics pipeline per test
cell. Test-time FPCs come from the health-state model; untriggered cells
are listed and excluded from the aggregate.
"""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Tuple
import logging

from ..contracts.base import DataError, ErrorCode
from ..contracts.data_contracts import CellHistory
from ..contracts.inference_contracts import FPCDecision, RULCurve
from ..contracts.validation_contracts import CellReportRow, MetricsReport
from ..fpc.hs_model import HSModel
from ..fpc.stage_model import check_compatible
from ..fpc.trigger import decide_fpc
from ..rulpred.rul_model import RULModel, predict_curve
from .metrics import MAPE_FLOOR, aggregate_metrics, compute_metrics

logger = logging.getLogger(__name__)


def evaluate_cell(
    rul_model: RULModel,
    hs_model: HSModel,
    cell: CellHistory,
    k: int = 5,
    mape_floor: float = MAPE_FLOOR,
) -> Tuple[CellReportRow, FPCDecision, Optional[RULCurve]]:
    decision = decide_fpc(hs_model, cell, k)
    if not decision.triggered:
        row = CellReportRow(cell_id=cell.cell_id, eol=cell.eol, fpc_cycle=None, triggered=False)
        return row, decision, None
    curve = predict_curve(rul_model, cell, decision.fpc_cycle)
    row = CellReportRow(
        cell_id=cell.cell_id, eol=cell.eol, fpc_cycle=decision.fpc_cycle,
        triggered=True, metrics=compute_metrics(curve, mape_floor),
    )
    return row, decision, curve


def evaluate_fleet(
    rul_model: RULModel,
    hs_model: HSModel,
    test_cells: Sequence[CellHistory],
    k: int = 5,
    mape_floor: float = MAPE_FLOOR,
    workers: Optional[int] = None,
) -> MetricsReport:
    """Evaluate every test cell; rows are ordered by cell_id."""
    if not test_cells:
        raise DataError(ErrorCode.EMPTY_INPUT, "no test cells to evaluate")
    check_compatible(hs_model, rul_model)
    ordered = sorted(test_cells, key=lambda c: c.cell_id)

    def run(cell: CellHistory):
        try:
            return evaluate_cell(rul_model, hs_model, cell, k, mape_floor)
        except DataError as exc:
            raise exc.with_context('cell_id', cell.cell_id)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, ordered))

    rows = tuple(r for r, _, _ in results)
    untriggered = tuple(r.cell_id for r in rows if not r.triggered)
    for cell_id in untriggered:
        logger.warning("Cell %s never triggered; excluded from the aggregate", cell_id)
    return MetricsReport(
        rows=rows,
        aggregate=aggregate_metrics(rows),
        untriggered=untriggered,
        curves=tuple(c for _, _, c in results if c is not None),
        decisions=tuple(d for _, d, _ in results),
    )
