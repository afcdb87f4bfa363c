"""
Data Contracts

Immutable data structures for the data foundation: per-cycle records,
cell histories, channel selections, normalization statistics and the
window samples cut from them.

NO PROCESSING LOGIC HERE - only data definitions and their invariants.
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, Tuple
import math

import numpy as np

from .base import ConfigError, DataError, ErrorCode


# =============================================================================
# CHANNELS
# =============================================================================

# Canonical order; feature counts expand along it.
CHANNELS: Tuple[str, ...] = (
    "discharge_capacity",
    "charge_capacity",
    "internal_resistance",
    "charge_time",
    "temp_avg",
    "temp_min",
    "temp_max",
)

CSV_COLUMNS: Tuple[str, ...] = (
    "cycle_index",
    "discharge_capacity",
    "charge_capacity",
    "internal_resistance",
    "temp_avg",
    "temp_min",
    "temp_max",
    "charge_time",
)


# =============================================================================
# CYCLE RECORDS
# =============================================================================

@dataclass(frozen=True)
class CycleRecord:
    """
    One cycle of one cell across the seven measured channels.

    Units: capacities in Ah, resistance in Ohm, temperatures in degC,
    charge time in minutes.
    """
    cycle_index: int
    discharge_capacity: float
    charge_capacity: float
    internal_resistance: float
    temp_avg: float
    temp_min: float
    temp_max: float
    charge_time: float

    def __post_init__(self):
        if self.cycle_index < 1:
            raise DataError(
                ErrorCode.RECORD_INVARIANT,
                "cycle_index must be a positive integer",
                cycle_index=self.cycle_index,
            )
        for name in CHANNELS:
            if not math.isfinite(getattr(self, name)):
                raise DataError(
                    ErrorCode.NON_FINITE_VALUE,
                    f"{name} is not finite",
                    cycle_index=self.cycle_index,
                )
        for name in ("discharge_capacity", "charge_capacity",
                     "internal_resistance", "charge_time"):
            if getattr(self, name) <= 0:
                raise DataError(
                    ErrorCode.RECORD_INVARIANT,
                    f"{name} must be > 0",
                    cycle_index=self.cycle_index,
                )
        if not (self.temp_min <= self.temp_avg <= self.temp_max):
            raise DataError(
                ErrorCode.RECORD_INVARIANT,
                "temperatures must satisfy temp_min <= temp_avg <= temp_max",
                cycle_index=self.cycle_index,
            )

    def value(self, channel: str) -> float:
        return getattr(self, channel)


@dataclass(frozen=True)
class CellHistory:
    """
    One battery's ordered per-cycle history.

    INVARIANTS:
    - records sorted by cycle_index, contiguous from 1 to eol
    - eol == len(records)
    """
    cell_id: str
    records: Tuple[CycleRecord, ...]

    def __post_init__(self):
        if not self.cell_id:
            raise DataError(ErrorCode.RECORD_INVARIANT, "cell_id must be non-empty")
        if not self.records:
            raise DataError(ErrorCode.EMPTY_INPUT, "cell has no records", cell_id=self.cell_id)
        for expected, record in enumerate(self.records, start=1):
            if record.cycle_index != expected:
                raise DataError(
                    ErrorCode.CYCLE_GAP,
                    f"expected cycle {expected}, found {record.cycle_index}",
                    cell_id=self.cell_id,
                )

    @property
    def eol(self) -> int:
        return len(self.records)

    @cached_property
    def _columns(self) -> Dict[str, np.ndarray]:
        columns = {}
        for name in CHANNELS:
            column = np.array([r.value(name) for r in self.records], dtype=np.float64)
            column.setflags(write=False)
            columns[name] = column
        return columns

    def channel(self, name: str) -> np.ndarray:
        """Read-only float64 column for one channel, indexed by cycle - 1."""
        if name not in self._columns:
            raise DataError(ErrorCode.MISSING_CHANNEL, f"unknown channel {name!r}")
        return self._columns[name]

    def channel_matrix(self, selection: FeatureSelection) -> np.ndarray:
        """Selected channels stacked as an (n_f, eol) matrix."""
        return np.stack([self.channel(name) for name in selection.channels])


# =============================================================================
# FEATURE SELECTION & NORMALIZATION
# =============================================================================

@dataclass(frozen=True)
class FeatureSelection:
    """Ordered subset of CHANNELS, kept in canonical relative order; any invalid selection is a ConfigError."""
    channels: Tuple[str, ...]

    def __post_init__(self):
        if not 1 <= len(self.channels) <= len(CHANNELS):
            raise ConfigError(
                ErrorCode.CONFIG_INVALID,
                f"feature count must be in 1..{len(CHANNELS)}, got {len(self.channels)}",
            )
        if len(set(self.channels)) != len(self.channels):
            raise ConfigError(ErrorCode.CONFIG_INVALID, "duplicate channels in selection")
        unknown = [c for c in self.channels if c not in CHANNELS]
        if unknown:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "unknown channel in selection", channel=unknown[0])
        if list(self.channels) != sorted(self.channels, key=CHANNELS.index):
            raise ConfigError(
                ErrorCode.CONFIG_INVALID,
                "selection must follow the canonical channel order",
                channels=",".join(self.channels),
            )

    @staticmethod
    def from_count(count: int) -> FeatureSelection:
        if not isinstance(count, int) or not 1 <= count <= len(CHANNELS):
            raise ConfigError(
                ErrorCode.CONFIG_INVALID,
                f"feature count must be an integer in 1..{len(CHANNELS)}",
                count=count,
            )
        return FeatureSelection(channels=CHANNELS[:count])

    @property
    def count(self) -> int:
        return len(self.channels)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-channel z-score statistics pooled over training cycles."""
    channels: Tuple[str, ...]
    means: Tuple[float, ...]
    stds: Tuple[float, ...]

    def __post_init__(self):
        if not (len(self.channels) == len(self.means) == len(self.stds)):
            raise DataError(ErrorCode.SHAPE_MISMATCH, "stats fields differ in length")
        for name, std in zip(self.channels, self.stds):
            if not (math.isfinite(std) and std > 0):
                raise DataError(ErrorCode.ZERO_VARIANCE, "std must be > 0", channel=name)

    def lookup(self, channel: str) -> Tuple[float, float]:
        if channel not in self.channels:
            raise DataError(ErrorCode.MISSING_CHANNEL, "channel missing from stats", channel=channel)
        i = self.channels.index(channel)
        return self.means[i], self.stds[i]

    def vectors(self, selection: FeatureSelection) -> Tuple[np.ndarray, np.ndarray]:
        """(means, stds) as column vectors aligned to `selection`."""
        pairs = [self.lookup(name) for name in selection.channels]
        means = np.array([m for m, _ in pairs], dtype=np.float64)[:, None]
        stds = np.array([s for _, s in pairs], dtype=np.float64)[:, None]
        return means, stds


@dataclass(frozen=True, eq=False)
class NormalizedCell:
    """
    Normalized view of a CellHistory: only the selected channels, z-scored.

    Exposes channel_matrix() like CellHistory so windowing accepts both.
    """
    cell_id: str
    selection: FeatureSelection
    values: np.ndarray  # (n_f, eol)

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != self.selection.count:
            raise DataError(ErrorCode.SHAPE_MISMATCH, "values must be (n_f, eol)", cell_id=self.cell_id)
        self.values.setflags(write=False)

    @property
    def eol(self) -> int:
        return int(self.values.shape[1])

    def channel_matrix(self, selection: FeatureSelection) -> np.ndarray:
        if selection != self.selection:
            raise DataError(
                ErrorCode.MISSING_CHANNEL,
                "normalized view was built for a different selection",
                cell_id=self.cell_id,
            )
        return self.values


# =============================================================================
# WINDOWS & LABELS
# =============================================================================

class HSLabel(Enum):
    """Stage-1 health state label."""
    HEALTHY = 0
    UNHEALTHY = 1
    UNLABELED = None


@dataclass(frozen=True, eq=False)
class WindowSample:
    """
    An (n_f, n_w) slice of a cell: rows are channels, columns cycles s..t.

    anchor_cycle t = start_cycle + n_w - 1 is the cycle the window speaks for.
    """
    cell_id: str
    start_cycle: int
    features: np.ndarray

    @property
    def n_w(self) -> int:
        return int(self.features.shape[1])

    @property
    def anchor_cycle(self) -> int:
        return self.start_cycle + self.n_w - 1


@dataclass(frozen=True)
class RULTarget:
    """Stage-2 target: remaining life as a fraction of the FPC-to-EOL span."""
    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise DataError(ErrorCode.INVALID_FPC, "RUL fraction outside [0, 1]", fraction=self.fraction)

