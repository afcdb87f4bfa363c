"""
Single-Cell Degradation Generator

Builds a statistically plausible per-cycle history for one cell.

FADE MODEL:
===========
capacity(t) = nominal - linear(t) - knee(t)

- linear(t): nominal * pre_knee_fade_per_cycle * (t - 1), active all life
- knee(t):   budget * ((t - K) / (eol - K)) ** post_knee_exponent for t > K
- budget is whatever of the 20% fade the linear part leaves, so the noiseless
  trend starts at nominal and ends at exactly 0.8 * nominal (EOL at 80%)
- the linear part may use at most half of the 20% fade (MAX_PRE_KNEE_SHARE);
  with post_knee_exponent >= 2 the mean fade over the last 10% of life is
  then at least twice the mean fade over the first 10%

Resistance and charge time follow the fade fraction, so both bend at the knee.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..contracts.base import ConfigError, ErrorCode
from ..contracts.data_contracts import CellHistory, CycleRecord

EOL_CAPACITY_RATIO = 0.8
MIN_EOL = 60
MAX_PRE_KNEE_SHARE = 0.5
_POSITIVE_FLOOR = 1e-9


@dataclass(frozen=True)
class DegradationParams:
    """Shape, scale and noise of one synthetic cell."""
    eol: int
    nominal_capacity: float = 1.1
    knee_fraction: float = 0.7
    pre_knee_fade_per_cycle: float = 0.0
    post_knee_exponent: float = 2.0
    capacity_noise_std: float = 0.0
    resistance_initial: float = 0.016
    resistance_growth: float = 0.2
    temp_base: float = 32.0
    temp_spread: float = 3.0
    charge_time_base: float = 10.0
    charge_time_drift: float = 0.05
    rng_seed: int = 0
    resistance_noise_std: float = 0.0
    charge_time_noise_std: float = 0.0
    temp_wobble_std: float = 0.05
    coulombic_offset: float = 0.002

    def __post_init__(self):
        if not isinstance(self.eol, (int, np.integer)) or self.eol < MIN_EOL:
            raise ConfigError(ErrorCode.CONFIG_INVALID, f"eol must be an integer >= {MIN_EOL}", eol=self.eol)
        positive = ("nominal_capacity", "resistance_initial", "charge_time_base")
        non_negative = ("pre_knee_fade_per_cycle", "capacity_noise_std", "resistance_growth",
                        "temp_spread", "resistance_noise_std", "charge_time_noise_std",
                        "temp_wobble_std")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(ErrorCode.CONFIG_INVALID, f"{name} must be > 0")
        for name in non_negative:
            if not getattr(self, name) >= 0:
                raise ConfigError(ErrorCode.CONFIG_INVALID, f"{name} must be >= 0")
        if not 0.0 < self.knee_fraction < 1.0:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "knee_fraction must be in (0, 1)")
        if not self.post_knee_exponent >= 1.0:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "post_knee_exponent must be >= 1")
        if not self.charge_time_drift > -1.0 or not self.coulombic_offset > -1.0:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "drift and coulombic offset must be > -1")
        if self.pre_knee_share > MAX_PRE_KNEE_SHARE + 1e-12:
            raise ConfigError(
                ErrorCode.GENERATION_INFEASIBLE,
                f"pre-knee fade uses more than {MAX_PRE_KNEE_SHARE:.0%} of the fade budget; the knee would vanish",
                pre_knee_fade_per_cycle=self.pre_knee_fade_per_cycle, eol=self.eol,
            )

    @property
    def pre_knee_share(self) -> float:
        """Share of the 20% fade consumed by the linear term over the whole life."""
        return self.pre_knee_fade_per_cycle * (self.eol - 1) / (1.0 - EOL_CAPACITY_RATIO)


def knee_cycle(params: DegradationParams) -> int:
    """Cycle after which fade accelerates."""
    return min(max(1, int(round(params.knee_fraction * params.eol))), params.eol - 1)


def capacity_trend(params: DegradationParams) -> np.ndarray:
    """Noiseless discharge capacity for cycles 1..eol."""
    n = params.nominal_capacity
    total_fade = (1.0 - EOL_CAPACITY_RATIO) * n
    linear_fade = n * params.pre_knee_fade_per_cycle * (params.eol - 1)
    budget = total_fade - linear_fade
    t = np.arange(1, params.eol + 1, dtype=np.float64)
    k = knee_cycle(params)
    progress = np.clip((t - k) / (params.eol - k), 0.0, 1.0)
    trend = n - n * params.pre_knee_fade_per_cycle * (t - 1) - budget * progress ** params.post_knee_exponent
    trend[0] = n
    trend[-1] = EOL_CAPACITY_RATIO * n
    return trend


def _noise(rng: np.random.Generator, std: float, size: int) -> np.ndarray:
    """Truncated Gaussian, clipped at +/- 3 sigma."""
    if std == 0:
        return np.zeros(size)
    return np.clip(rng.normal(0.0, std, size), -3.0 * std, 3.0 * std)


def generate_channels(params: DegradationParams) -> Dict[str, np.ndarray]:
    """All seven channels for cycles 1..eol, noise included."""
    rng = np.random.default_rng(params.rng_seed)
    size = params.eol
    trend = capacity_trend(params)
    fade_fraction = (params.nominal_capacity - trend) / ((1.0 - EOL_CAPACITY_RATIO) * params.nominal_capacity)

    discharge = trend + _noise(rng, params.capacity_noise_std, size)
    charge = trend * (1.0 + params.coulombic_offset) + _noise(rng, params.capacity_noise_std, size)
    resistance = (params.resistance_initial * (1.0 + params.resistance_growth * fade_fraction)
                  + _noise(rng, params.resistance_noise_std, size))
    charge_time = (params.charge_time_base * (1.0 + params.charge_time_drift * fade_fraction)
                   + _noise(rng, params.charge_time_noise_std, size))
    temp_avg = params.temp_base + _noise(rng, params.temp_wobble_std, size)

    return {
        "discharge_capacity": np.maximum(discharge, _POSITIVE_FLOOR),
        "charge_capacity": np.maximum(charge, _POSITIVE_FLOOR),
        "internal_resistance": np.maximum(resistance, _POSITIVE_FLOOR),
        "charge_time": np.maximum(charge_time, _POSITIVE_FLOOR),
        "temp_avg": temp_avg,
        "temp_min": temp_avg - params.temp_spread,
        "temp_max": temp_avg + params.temp_spread,
    }


def generate_cell(params: DegradationParams, cell_id: str = "synthetic") -> CellHistory:
    """One CellHistory with `params.eol` records; same params -> identical cell."""
    channels = generate_channels(params)
    names = list(channels)
    records = tuple(
        CycleRecord(cycle_index=i + 1, **{name: float(channels[name][i]) for name in names})
        for i in range(params.eol)
    )
    return CellHistory(cell_id=cell_id, records=records)
