"""
Layer Kernels

Batched forward/backward kernels for the gated recurrent layer and the
dense layer. Pure functions over numpy arrays; all state lives in the
returned caches.

LAYOUT:
=======
- Recurrent input is time-major: (T, B, D)
- Gate blocks along the last axis of W, U and b: input, forget, cell, output
- W: (D, 4H), U: (H, 4H), b: (4H,)
"""

from __future__ import annotations
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..contracts.model_contracts import Activation


# =============================================================================
# ACTIVATIONS
# =============================================================================

def sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form never overflows
    return 0.5 * (np.tanh(0.5 * z) + 1.0)


def activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.RECTIFIER:
        return np.maximum(z, 0.0)
    if activation is Activation.LOGISTIC:
        return sigmoid(z)
    if activation is Activation.TANH:
        return np.tanh(z)
    return z


def activation_grad(z: np.ndarray, a: np.ndarray, activation: Activation) -> np.ndarray:
    """d a / d z given the pre-activation z and the output a; rectifier uses 0 at the kink."""
    if activation is Activation.RECTIFIER:
        return (z > 0.0).astype(z.dtype)
    if activation is Activation.LOGISTIC:
        return a * (1.0 - a)
    if activation is Activation.TANH:
        return 1.0 - a * a
    return np.ones_like(z)


# =============================================================================
# GATED RECURRENT LAYER
# =============================================================================

@dataclass(frozen=True)
class LSTMCache:
    x: np.ndarray        # (T, B, D)
    h: np.ndarray        # (T + 1, B, H), h[0] is the zero initial state
    c: np.ndarray        # (T + 1, B, H)
    gates: np.ndarray    # (T, B, 4H) post-activation
    tanh_c: np.ndarray   # (T, B, H)


def lstm_forward(
    x: np.ndarray,
    W: np.ndarray,
    U: np.ndarray,
    b: np.ndarray,
) -> Tuple[np.ndarray, LSTMCache]:
    """Run one layer over the whole sequence; returns hidden states (T, B, H)."""
    T, B, _ = x.shape
    H = U.shape[0]
    h = np.zeros((T + 1, B, H))
    c = np.zeros((T + 1, B, H))
    gates = np.empty((T, B, 4 * H))
    tanh_c = np.empty((T, B, H))

    # input projection for all steps at once
    projected = x @ W + b
    for t in range(T):
        z = projected[t] + h[t] @ U
        gates[t] = sigmoid(z)
        gates[t, :, 2 * H:3 * H] = np.tanh(z[:, 2 * H:3 * H])
        i, f = gates[t, :, :H], gates[t, :, H:2 * H]
        g, o = gates[t, :, 2 * H:3 * H], gates[t, :, 3 * H:]
        c[t + 1] = f * c[t] + i * g
        tanh_c[t] = np.tanh(c[t + 1])
        h[t + 1] = o * tanh_c[t]

    return h[1:], LSTMCache(x=x, h=h, c=c, gates=gates, tanh_c=tanh_c)


def lstm_backward(
    dh_out: np.ndarray,
    cache: LSTMCache,
    W: np.ndarray,
    U: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Backprop through time. Returns (dx, dW, dU, db).

    Only the recurrent path runs step by step; the weight, bias and input
    gradients are contracted over all steps once the gate gradients are known.
    """
    T, B, H = dh_out.shape
    dz_all = np.empty((T, B, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))

    for t in reversed(range(T)):
        gates = cache.gates[t]
        i, f = gates[:, :H], gates[:, H:2 * H]
        g, o = gates[:, 2 * H:3 * H], gates[:, 3 * H:]
        tanh_c = cache.tanh_c[t]
        dz = dz_all[t]

        dh = dh_out[t] + dh_next
        dc = dc_next + dh * o * (1.0 - tanh_c * tanh_c)

        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * cache.c[t] * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H:] = dh * tanh_c * o * (1.0 - o)

        dh_next = dz @ U.T
        dc_next = dc * f

    dW = np.tensordot(cache.x, dz_all, axes=([0, 1], [0, 1]))
    dU = np.tensordot(cache.h[:-1], dz_all, axes=([0, 1], [0, 1]))
    db = dz_all.sum(axis=(0, 1))
    dx = dz_all @ W.T
    return dx, dW, dU, db


# =============================================================================
# DENSE LAYER
# =============================================================================

@dataclass(frozen=True)
class DenseCache:
    x: np.ndarray
    z: np.ndarray
    a: np.ndarray
    activation: Activation


def dense_forward(
    x: np.ndarray,
    W: np.ndarray,
    b: np.ndarray,
    activation: Activation,
) -> Tuple[np.ndarray, DenseCache]:
    z = x @ W + b
    a = activate(z, activation)
    return a, DenseCache(x=x, z=z, a=a, activation=activation)


def dense_backward(
    da: np.ndarray,
    cache: DenseCache,
    W: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns (dx, dW, db)."""
    dz = da * activation_grad(cache.z, cache.a, cache.activation)
    return dz @ W.T, cache.x.T @ dz, dz.sum(axis=0)
