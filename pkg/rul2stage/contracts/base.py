"""
Base Contracts and Shared Types

Foundational types used across all layers: the enumerated error codes,
the immutable error record, and the exception family that carries it.

BOUNDARY ENFORCEMENT:
=====================
- Every layer may import from here; this module imports no other layer
- Errors are data first (Error) and raised second (PipelineError)
- No silent fallbacks: every failure mode has its own ErrorCode
"""

from __future__ import annotations
from dataclasses import dataclass, field
from enum import Enum, auto
from fractions import Fraction
from typing import Tuple


# =============================================================================
# ERROR STATES (Explicit, never silent)
# =============================================================================

class ErrorCode(Enum):
    """
    Explicit error codes for deterministic error handling.
    Grouped by the layer that raises them.
    """
    # Data layer
    FILE_NOT_FOUND = auto()
    MALFORMED_ROW = auto()
    MISSING_COLUMN = auto()
    CYCLE_GAP = auto()
    NON_FINITE_VALUE = auto()
    RECORD_INVARIANT = auto()
    ZERO_VARIANCE = auto()
    MISSING_CHANNEL = auto()
    INVALID_SPLIT = auto()
    EMPTY_INPUT = auto()

    # Windowing / labeling
    CELL_TOO_SHORT = auto()
    LABELING_INFEASIBLE = auto()
    INVALID_FPC = auto()

    # Numeric engine
    SHAPE_MISMATCH = auto()
    STALE_CACHE = auto()
    NON_FINITE_NUMERIC = auto()
    INVALID_LABEL = auto()

    # Artifacts
    CHECKPOINT_CORRUPT = auto()
    CHECKPOINT_VERSION = auto()

    # Pipeline
    CONFIG_INVALID = auto()
    INCOMPATIBLE_MODELS = auto()
    NO_TRIGGERED_CELLS = auto()
    GENERATION_INFEASIBLE = auto()
    OUTPUT_LOCKED = auto()


@dataclass(frozen=True)
class Error:
    """
    Immutable error representation with full context.
    Errors are data, not just exceptions - they can be stored and reported.
    """
    code: ErrorCode
    message: str
    context: Tuple[Tuple[str, str], ...] = field(default_factory=tuple)

    def with_context(self, key: str, value: object) -> Error:
        """Return new Error with additional context (immutable)."""
        return Error(
            code=self.code,
            message=self.message,
            context=self.context + ((key, str(value)),)
        )

    def describe(self) -> str:
        if not self.context:
            return f"{self.code.name}: {self.message}"
        ctx = ", ".join(f"{k}={v}" for k, v in self.context)
        return f"{self.code.name}: {self.message} [{ctx}]"


# =============================================================================
# EXCEPTIONS (each carries an Error)
# =============================================================================

class PipelineError(Exception):
    """Base exception; `exit_code` is what the CLI returns for it."""

    exit_code: int = 1

    def __init__(self, code: ErrorCode, message: str, **context: object):
        error = Error(code=code, message=message)
        for key, value in context.items():
            error = error.with_context(key, value)
        self.error = error
        super().__init__(error.describe())

    @property
    def code(self) -> ErrorCode:
        return self.error.code

    def with_context(self, key: str, value: object) -> PipelineError:
        """Attach context in place and return self (for `raise exc.with_context(...)`)."""
        self.error = self.error.with_context(key, value)
        self.args = (self.error.describe(),)
        return self


class ConfigError(PipelineError):
    """Invalid configuration or incompatible artifacts."""
    exit_code = 2


class DataError(PipelineError):
    """Malformed, inconsistent or insufficient data."""
    exit_code = 3


class NumericError(PipelineError):
    """Non-finite values or broken numeric contracts during compute."""
    exit_code = 4


# =============================================================================
# HELPERS
# =============================================================================

def exact_fraction(value: float) -> Fraction:
    """
    Decimal-exact rational for a user-facing fraction such as p = 0.1.

    `0.1 * 30` is 3.0000000000000004 in floating point, which would move a
    ceil() boundary; the shortest decimal repr is what the user meant.
    """
    return Fraction(repr(float(value)))
