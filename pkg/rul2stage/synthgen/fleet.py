"""
Fleet Generator

Samples per-cell DegradationParams from validated ranges and builds a
fleet deterministically from one master seed.
"""

from __future__ import annotations
from typing import Dict, List, Mapping, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from ..contracts.base import ConfigError, ErrorCode
from ..contracts.data_contracts import CellHistory
from .degradation import EOL_CAPACITY_RATIO, MAX_PRE_KNEE_SHARE, MIN_EOL, DegradationParams, generate_cell

logger = logging.getLogger(__name__)

MAX_EOL = 3000

Range = Tuple[float, float]

# Sampled in this order from the master generator; changing it changes fleets.
_SAMPLED_FIELDS = (
    "nominal_capacity",
    "knee_fraction",
    "pre_knee_fade_share",
    "post_knee_exponent",
    "capacity_noise_std",
    "resistance_initial",
    "resistance_growth",
    "resistance_noise_std",
    "temp_base",
    "temp_spread",
    "charge_time_base",
    "charge_time_drift",
    "charge_time_noise_std",
)


class FleetSpec(BaseModel):
    """
    Ranges for every sampled DegradationParams field.

    pre_knee_fade_share is the share of the 20% fade budget consumed by the
    linear term over the whole life; sampling the share instead of a
    per-cycle rate keeps every sampled cell constructible.
    """
    model_config = ConfigDict(frozen=True, extra='forbid')

    n_cells: int = 30
    master_seed: int = 0
    cell_prefix: str = "cell"
    eol_range: Tuple[int, int] = (150, 1200)
    nominal_capacity_range: Range = (1.06, 1.10)
    knee_fraction_range: Range = (0.55, 0.80)
    pre_knee_fade_share_range: Range = (0.10, 0.35)
    post_knee_exponent_range: Range = (2.0, 3.0)
    capacity_noise_std_range: Range = (0.0005, 0.0015)
    resistance_initial_range: Range = (0.014, 0.018)
    resistance_growth_range: Range = (0.10, 0.30)
    resistance_noise_std_range: Range = (0.0, 0.0001)
    temp_base_range: Range = (31.0, 34.0)
    temp_spread_range: Range = (2.0, 4.0)
    charge_time_base_range: Range = (9.0, 13.0)
    charge_time_drift_range: Range = (0.02, 0.10)
    charge_time_noise_std_range: Range = (0.0, 0.05)

    @field_validator('*', mode='before')
    @classmethod
    def _split_range_text(cls, value, info):
        if info.field_name.endswith('_range') and isinstance(value, str):
            parts = [p.strip() for p in value.split(',')]
            if len(parts) != 2:
                raise ValueError("a range is written as 'low,high'")
            return tuple(parts)
        return value

    @model_validator(mode='after')
    def _check_ranges(self) -> FleetSpec:
        if self.n_cells < 0:
            raise ValueError("n_cells must be >= 0")
        for name in type(self).model_fields:
            if name.endswith('_range'):
                low, high = getattr(self, name)
                if low > high:
                    raise ValueError(f"{name}: low {low} exceeds high {high}")
        low, high = self.eol_range
        if low < MIN_EOL or high > MAX_EOL:
            raise ValueError(f"eol_range must lie within [{MIN_EOL}, {MAX_EOL}]")
        share_low, share_high = self.pre_knee_fade_share_range
        if share_low < 0 or share_high > MAX_PRE_KNEE_SHARE:
            raise ValueError(f"pre_knee_fade_share_range must lie within [0, {MAX_PRE_KNEE_SHARE}]")
        return self

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> FleetSpec:
        """Validate raw (e.g. file-parsed) values, raising ConfigError on failure."""
        try:
            return cls.model_validate(dict(values))
        except ValidationError as exc:
            first = exc.errors()[0]
            field = ".".join(str(p) for p in first.get('loc', ())) or "spec"
            raise ConfigError(ErrorCode.CONFIG_INVALID, first.get('msg', str(exc)), key=field)


def sample_params(spec: FleetSpec) -> List[DegradationParams]:
    """Per-cell parameters, drawn in a fixed order from master_seed."""
    rng = np.random.default_rng(spec.master_seed)
    params = []
    for _ in range(spec.n_cells):
        eol = int(rng.integers(spec.eol_range[0], spec.eol_range[1] + 1))
        draws: Dict[str, float] = {}
        for name in _SAMPLED_FIELDS:
            low, high = getattr(spec, f"{name}_range")
            draws[name] = float(rng.uniform(low, high)) if high > low else float(low)
        share = draws.pop("pre_knee_fade_share")
        params.append(DegradationParams(
            eol=eol,
            pre_knee_fade_per_cycle=share * (1.0 - EOL_CAPACITY_RATIO) / (eol - 1),
            rng_seed=int(rng.integers(0, 2**31 - 1)),
            **draws,
        ))
    return params


def generate_fleet(spec: FleetSpec) -> List[CellHistory]:
    """n_cells synthetic cells named <prefix>001, <prefix>002, ..."""
    cells = [
        generate_cell(p, cell_id=f"{spec.cell_prefix}{i + 1:03d}")
        for i, p in enumerate(sample_params(spec))
    ]
    if cells:
        eols = [c.eol for c in cells]
        logger.info("Generated %d cells, eol %d..%d", len(cells), min(eols), max(eols))
    return cells
