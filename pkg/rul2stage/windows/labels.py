"""
Window Labels

Stage-1 health-state labels and stage-2 remaining-life targets.

HS RULE:
========
- Healthy:   the window STARTS inside the first p-fraction (s <= ceil(p * eol))
- Unhealthy: the window ENDS inside the last p-fraction (t >= floor((1 - p) * eol))
- Otherwise Unlabeled; a cell where one window could be both is infeasible

RUL RULE:
=========
fraction = (eol - t) / (eol - fpc) for every window with anchor t >= fpc,
so the target is exactly 1 at the FPC anchor and exactly 0 at eol.
"""

from __future__ import annotations
from typing import List, Sequence, Tuple
import math

from ..contracts.base import ConfigError, DataError, ErrorCode, exact_fraction
from ..contracts.data_contracts import HSLabel, RULTarget, WindowSample


# =============================================================================
# HEALTH-STATE LABELS
# =============================================================================

def healthy_limit(eol: int, p: float) -> int:
    """Last start cycle that still counts as healthy."""
    return math.ceil(exact_fraction(p) * eol)


def unhealthy_from(eol: int, p: float) -> int:
    """First anchor cycle that counts as unhealthy."""
    return math.floor((1 - exact_fraction(p)) * eol)


def labels_feasible(eol: int, n_w: int, p: float) -> bool:
    """False when some window would be both healthy and unhealthy."""
    return healthy_limit(eol, p) + n_w - 1 < unhealthy_from(eol, p)


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ConfigError(ErrorCode.CONFIG_INVALID, "p must be in (0, 1)", p=p)


def _check_same_cell(windows: Sequence[WindowSample], eol: int) -> None:
    cell_id = windows[0].cell_id
    for w in windows:
        if w.cell_id != cell_id:
            raise DataError(ErrorCode.RECORD_INVARIANT, "windows come from different cells",
                            cell_id=cell_id, other=w.cell_id)
        if w.anchor_cycle > eol:
            raise DataError(ErrorCode.RECORD_INVARIANT, "window ends after eol",
                            cell_id=cell_id, anchor_cycle=w.anchor_cycle, eol=eol)


def hs_label(start_cycle: int, anchor_cycle: int, eol: int, p: float) -> HSLabel:
    """Label for one window; feasibility is the caller's concern."""
    if start_cycle <= healthy_limit(eol, p):
        return HSLabel.HEALTHY
    if anchor_cycle >= unhealthy_from(eol, p):
        return HSLabel.UNHEALTHY
    return HSLabel.UNLABELED


def assign_hs_labels(
    windows: Sequence[WindowSample],
    eol: int,
    p: float = 0.10,
) -> List[Tuple[WindowSample, HSLabel]]:
    """Label every window of one cell as Healthy, Unhealthy or Unlabeled."""
    _check_p(p)
    if not windows:
        return []
    _check_same_cell(windows, eol)
    n_w = windows[0].n_w
    if not labels_feasible(eol, n_w, p):
        raise DataError(
            ErrorCode.LABELING_INFEASIBLE,
            "healthy and unhealthy regions overlap",
            cell_id=windows[0].cell_id, eol=eol, n_w=n_w, p=p,
        )
    return [(w, hs_label(w.start_cycle, w.anchor_cycle, eol, p)) for w in windows]


# =============================================================================
# RUL TARGETS
# =============================================================================

def assign_rul_targets(
    windows: Sequence[WindowSample],
    eol: int,
    fpc: int,
) -> List[Tuple[WindowSample, RULTarget]]:
    """Keep windows anchored at or after fpc and attach their RUL fraction."""
    if not 1 <= fpc < eol:
        raise DataError(ErrorCode.INVALID_FPC, "fpc must satisfy 1 <= fpc < eol", fpc=fpc, eol=eol)
    if not windows:
        return []
    _check_same_cell(windows, eol)
    span = eol - fpc
    return [
        (w, RULTarget(fraction=(eol - w.anchor_cycle) / span))
        for w in windows
        if w.anchor_cycle >= fpc
    ]
