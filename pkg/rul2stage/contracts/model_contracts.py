"""
Model Contracts

Immutable descriptions of the sequence network (architecture, head,
training knobs) and of a finished training run.

NO LEARNING LOGIC HERE - only data definitions.
"""

from __future__ import annotations
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

from .base import ConfigError, ErrorCode


# =============================================================================
# ENUMS
# =============================================================================

class Activation(Enum):
    """Activation tags for dense layers."""
    RECTIFIER = "rectifier"
    LOGISTIC = "logistic"
    IDENTITY = "identity"
    TANH = "tanh"


class HeadType(Enum):
    """Output heads; each is a single unit."""
    HS = "hs"               # logistic, stage 1
    RUL = "rul"             # rectifier, stage 2
    FORECAST = "forecast"   # identity, conventional-scheme baseline

    @property
    def activation(self) -> Activation:
        return {
            HeadType.HS: Activation.LOGISTIC,
            HeadType.RUL: Activation.RECTIFIER,
            HeadType.FORECAST: Activation.IDENTITY,
        }[self]


class LossType(Enum):
    BCE = "bce"
    MAE = "mae"
    MSE = "mse"


# =============================================================================
# ARCHITECTURE
# =============================================================================

@dataclass(frozen=True)
class ModelSpec:
    """
    Stacked recurrent feature extractor plus dense head.

    The recurrent layers run over the n_features axis (one step per channel)
    and read an n_w-vector per step, so the chain for 7 channels is
    7x50 -> 7x50 (stack 1) -> 7x50 (stack 2) -> 350 -> 128 -> 1.
    """
    n_features: int
    n_w: int = 50
    head: HeadType = HeadType.HS
    hidden_size: int = 50
    layers_per_stack: int = 4
    n_stacks: int = 2
    dense_units: int = 128

    def __post_init__(self):
        for name in ("n_features", "n_w", "hidden_size", "layers_per_stack",
                     "n_stacks", "dense_units"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(ErrorCode.CONFIG_INVALID, f"{name} must be a positive integer", value=value)

    @property
    def num_recurrent_layers(self) -> int:
        return self.layers_per_stack * self.n_stacks

    @property
    def flatten_size(self) -> int:
        return self.n_features * self.hidden_size

    def recurrent_input_size(self, layer: int) -> int:
        return self.n_w if layer == 0 else self.hidden_size

    def shape_chain(self) -> Tuple[Tuple[int, ...], ...]:
        """Per-sample output shape after input, each stack, flatten, dense and head."""
        chain = [(self.n_features, self.n_w)]
        chain += [(self.n_features, self.hidden_size)] * self.n_stacks
        chain += [(self.flatten_size,), (self.dense_units,), (1,)]
        return tuple(chain)

    def describe(self) -> Dict[str, object]:
        d = asdict(self)
        d["head"] = self.head.value
        return d

    @staticmethod
    def from_descriptor(d: Dict[str, object]) -> ModelSpec:
        d = dict(d)
        d["head"] = HeadType(d["head"])
        return ModelSpec(**d)


# =============================================================================
# TRAINING
# =============================================================================

@dataclass(frozen=True)
class TrainConfig:
    """Training knobs; defaults reproduce the published setup."""
    batch_size: int = 8
    max_epochs: int = 100
    patience: int = 20
    validation_fraction: float = 0.1
    seed: int = 0
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon: float = 1e-8
    clip_norm: Optional[float] = None
    eval_batch_size: int = 512

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "batch_size must be >= 1")
        if self.max_epochs < 1 or self.patience < 1:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "max_epochs and patience must be >= 1")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "validation_fraction must be in (0, 1)")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "learning_rate and epsilon must be > 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError(ErrorCode.CONFIG_INVALID, "beta1 and beta2 must be in [0, 1)")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError(ErrorCode.CONFIG_INVALID, "clip_norm must be > 0 when set")


@dataclass(frozen=True)
class EpochRecord:
    """Losses observed at the end of one epoch."""
    epoch: int
    train_loss: float
    val_loss: float
    improved: bool


@dataclass(frozen=True)
class TrainingHistory:
    """Record of a training run."""
    loss: LossType
    epochs: Tuple[EpochRecord, ...]
    best_epoch: int
    best_val_loss: float
    stopped_early: bool
    metadata: Tuple[Tuple[str, str], ...] = field(default_factory=tuple)

    @property
    def epochs_run(self) -> int:
        return len(self.epochs)
