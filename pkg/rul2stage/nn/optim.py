"""
Adam Optimizer

Functional form: adam_step() never mutates its inputs and returns fresh
parameter and state objects, so two identical calls give identical results.
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..contracts.base import ErrorCode, NumericError
from ..contracts.model_contracts import TrainConfig

Params = Dict[str, np.ndarray]


@dataclass(frozen=True)
class AdamState:
    """First/second moments mirroring the parameter dict, plus the step count."""
    step: int
    m: Params
    v: Params
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.99
    epsilon: float = 1e-8

    @staticmethod
    def initial(params: Params, config: Optional[TrainConfig] = None) -> AdamState:
        config = config or TrainConfig()
        return AdamState(
            step=0,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            learning_rate=config.learning_rate,
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
        )


def _check_shapes(params: Params, grads: Params, state: AdamState) -> None:
    if set(params) != set(grads) or set(params) != set(state.m):
        raise NumericError(ErrorCode.SHAPE_MISMATCH, "params, grads and optimizer state name different tensors")
    for name, value in params.items():
        if grads[name].shape != value.shape or state.m[name].shape != value.shape:
            raise NumericError(ErrorCode.SHAPE_MISMATCH, "gradient or moment shape differs from parameter", name=name)


def adam_step(params: Params, grads: Params, state: AdamState) -> Tuple[Params, AdamState]:
    """One bias-corrected Adam update."""
    _check_shapes(params, grads, state)
    t = state.step + 1
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    new_params, new_m, new_v = {}, {}, {}
    for name, value in params.items():
        g = grads[name]
        m = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        updated = value - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
        updated.setflags(write=False)       # Network.set_params adopts it without a copy
        new_params[name] = updated
        new_m[name], new_v[name] = m, v
    return new_params, AdamState(
        step=t, m=new_m, v=new_v, learning_rate=state.learning_rate,
        beta1=state.beta1, beta2=state.beta2, epsilon=state.epsilon,
    )


def global_norm(grads: Params) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_gradients(grads: Params, max_norm: float) -> Tuple[Params, float]:
    """Rescale so the global L2 norm is at most max_norm; returns (grads, pre-clip norm)."""
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads, norm
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm
