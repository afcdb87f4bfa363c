"""
Synthetic Degradation Layer

RESPONSIBILITY: Desk-scale stand-in for measured fleets
OUTPUTS: CellHistory values that pass every dataio invariant

MUST NOT: claim electrochemical fidelity; only the statistical shape
(flat plateau, knee, accelerating fade to 80%) is modelled.
"""

from .degradation import (
    EOL_CAPACITY_RATIO, MAX_PRE_KNEE_SHARE, MIN_EOL, DegradationParams, capacity_trend,
    generate_cell, generate_channels, knee_cycle,
)
from .fleet import MAX_EOL, FleetSpec, generate_fleet, sample_params

__all__ = [
    'EOL_CAPACITY_RATIO', 'MAX_PRE_KNEE_SHARE', 'MIN_EOL', 'MAX_EOL', 'DegradationParams',
    'capacity_trend', 'generate_cell', 'generate_channels', 'knee_cycle',
    'FleetSpec', 'generate_fleet', 'sample_params',
]
