"""
Run Configuration

Config files are flat `key=value` text with `#` comments. Keys are the
RunConfig / FleetSpec field names; unknown keys are rejected. Every
key has a default, so an empty file is a valid run.

PRECEDENCE:
===========
defaults < config file < command-line flags (--seed, --out, --features)
"""

from __future__ import annotations
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .contracts.base import ConfigError, ErrorCode
from .contracts.data_contracts import CHANNELS, FeatureSelection
from .contracts.model_contracts import ModelSpec, TrainConfig
from .synthgen.fleet import FleetSpec


class RunConfig(BaseModel):
    """Everything one pipeline run needs, validated before any compute starts."""
    model_config = ConfigDict(frozen=True, extra='forbid')

    # data & output
    data: Optional[str] = None
    test_data: Optional[str] = None
    out: str = "run"
    hs_checkpoint: Optional[str] = None
    rul_checkpoint: Optional[str] = None
    workers: Optional[int] = None

    # windowing, labeling, trigger
    features: int = 4
    n_w: int = 50
    step: int = 1
    p: float = 0.10
    k: int = 5

    # split
    n_train: int = 100
    seed: int = 0

    # training
    batch_size: int = 8
    max_epochs: int = 100
    patience: int = 20
    validation_fraction: float = 0.1
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon: float = 1e-8
    clip_norm: Optional[float] = None

    # architecture
    hidden_size: int = 50
    layers_per_stack: int = 4
    n_stacks: int = 2
    dense_units: int = 128

    # evaluation
    mape_floor: float = 0.01
    baseline_q: float = 0.4
    ablate_counts: Tuple[int, ...] = (1, 2, 3, 4, 7)
    plots: bool = True

    @field_validator('*', mode='before')
    @classmethod
    def _blank_is_none(cls, value, info):
        if isinstance(value, str) and value.strip() == "":
            return None
        if info.field_name == 'ablate_counts' and isinstance(value, str):
            return tuple(part.strip() for part in value.split(',') if part.strip())
        return value

    @field_validator('features')
    @classmethod
    def _feature_count(cls, value: int) -> int:
        if not 1 <= value <= len(CHANNELS):
            raise ValueError(f"feature count must be in 1..{len(CHANNELS)}")
        return value

    @field_validator('ablate_counts')
    @classmethod
    def _ablate_counts(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value:
            raise ValueError("at least one feature count is required")
        if len(set(value)) != len(value):
            raise ValueError("feature counts must not repeat")
        if any(not 1 <= c <= len(CHANNELS) for c in value):
            raise ValueError(f"feature counts must be in 1..{len(CHANNELS)}")
        return value

    @model_validator(mode='after')
    def _ranges(self) -> RunConfig:
        if self.n_w < 1 or self.step < 1 or self.k < 1:
            raise ValueError("n_w, step and k must be >= 1")
        if not 0.0 < self.p < 0.5:
            raise ValueError("p must be in (0, 0.5)")
        if self.n_train < 1:
            raise ValueError("n_train must be >= 1")
        if not 0.0 < self.baseline_q < 1.0:
            raise ValueError("baseline_q must be in (0, 1)")
        if self.mape_floor <= 0:
            raise ValueError("mape_floor must be > 0")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be >= 1")
        # surface TrainConfig / ModelSpec range errors at load time
        self.train_config()
        self.architecture()
        return self

    def selection(self, count: Optional[int] = None) -> FeatureSelection:
        return FeatureSelection.from_count(self.features if count is None else count)

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            validation_fraction=self.validation_fraction,
            seed=self.seed,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            epsilon=self.epsilon,
            clip_norm=self.clip_norm,
        )

    def architecture(self, count: Optional[int] = None) -> ModelSpec:
        return ModelSpec(
            n_features=self.features if count is None else count,
            n_w=self.n_w,
            hidden_size=self.hidden_size,
            layers_per_stack=self.layers_per_stack,
            n_stacks=self.n_stacks,
            dense_units=self.dense_units,
        )

    def require(self, *fields: str) -> Dict[str, Path]:
        """Resolve path-valued fields, failing if any is unset or missing on disk."""
        resolved = {}
        for name in fields:
            value = getattr(self, name)
            if value is None:
                raise ConfigError(ErrorCode.CONFIG_INVALID, f"'{name}' must be set", key=name)
            path = Path(value)
            if not path.exists():
                raise ConfigError(ErrorCode.CONFIG_INVALID, f"'{name}' does not exist", key=name, path=path)
            resolved[name] = path
        return resolved


# =============================================================================
# LOADING
# =============================================================================

def read_config_file(path: Optional[Union[str, Path]]) -> Dict[str, str]:
    """Parse a key=value file; None means no file (all defaults)."""
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError(ErrorCode.CONFIG_INVALID, "config file not found", file=path)
    values = dotenv_values(path, interpolate=False)
    missing = [k for k, v in values.items() if v is None]
    if missing:
        raise ConfigError(ErrorCode.CONFIG_INVALID, "line without '=' in config", file=path, key=missing[0])
    return dict(values)


def _first_error(exc: ValidationError) -> ConfigError:
    first = exc.errors()[0]
    field = ".".join(str(p) for p in first.get('loc', ())) or "config"
    return ConfigError(ErrorCode.CONFIG_INVALID, first.get('msg', str(exc)), key=field)


def _merge(values: Mapping[str, object], overrides: Optional[Mapping[str, object]]) -> Dict[str, object]:
    merged = dict(values)
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return merged


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, object]] = None,
) -> RunConfig:
    values = _merge(read_config_file(path), overrides)
    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        raise _first_error(exc).with_context("file", path)
    except ConfigError as exc:
        raise exc.with_context("file", path)


def load_fleet_spec(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, object]] = None,
) -> FleetSpec:
    values = _merge(read_config_file(path), overrides)
    try:
        return FleetSpec.from_mapping(values)
    except ConfigError as exc:
        raise exc.with_context('file', path)
