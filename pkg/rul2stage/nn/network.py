"""
Sequence Network

Two stacked blocks of gated recurrent layers run over the channel axis,
followed by flatten -> dense (rectifier) -> single-unit head.

INVARIANTS:
===========
- Parameters are stored as read-only float64 arrays in PARAMETER ORDER
  (lstm0.W, lstm0.U, lstm0.b, ..., dense.W, dense.b, head.W, head.b);
  checkpoints serialize in this order
- Every parameter update replaces the arrays and bumps the cache token,
  so a cache from before the update can't be fed to backward()
- Non-finite intermediates abort with NumericError
"""

from __future__ import annotations
from dataclasses import dataclass
from itertools import count
from typing import Dict, List, Optional, Tuple
import numpy as np

from ..contracts.base import DataError, ErrorCode, NumericError
from ..contracts.model_contracts import Activation, ModelSpec
from .layers import (
    DenseCache, LSTMCache, dense_backward, dense_forward, lstm_backward, lstm_forward,
)

Params = Dict[str, np.ndarray]

_TOKENS = count(1)
RECTIFIER_HEAD_BIAS = 0.5


# =============================================================================
# PARAMETER LAYOUT
# =============================================================================

def param_shapes(spec: ModelSpec) -> Dict[str, Tuple[int, ...]]:
    """Name -> shape, in serialization order."""
    H = spec.hidden_size
    shapes: Dict[str, Tuple[int, ...]] = {}
    for layer in range(spec.num_recurrent_layers):
        shapes[f"lstm{layer}.W"] = (spec.recurrent_input_size(layer), 4 * H)
        shapes[f"lstm{layer}.U"] = (H, 4 * H)
        shapes[f"lstm{layer}.b"] = (4 * H,)
    shapes["dense.W"] = (spec.flatten_size, spec.dense_units)
    shapes["dense.b"] = (spec.dense_units,)
    shapes["head.W"] = (spec.dense_units, 1)
    shapes["head.b"] = (1,)
    return shapes


def init_params(spec: ModelSpec, seed: int = 0) -> Params:
    """
    Recurrent weights uniform in +/- 1/sqrt(hidden), forget bias 1.0;
    dense and head weights uniform in +/- 1/sqrt(fan_in), zero bias, except a
    rectifier head, whose bias starts at 0.5 so training begins with the head active.
    """
    rng = np.random.default_rng(seed)
    H = spec.hidden_size
    params: Params = {}
    for name, shape in param_shapes(spec).items():
        if name.startswith("lstm"):
            if name.endswith(".b"):
                value = np.zeros(shape)
                value[H:2 * H] = 1.0
            else:
                bound = 1.0 / np.sqrt(H)
                value = rng.uniform(-bound, bound, size=shape)
        elif name.endswith(".W"):
            bound = 1.0 / np.sqrt(shape[0])
            value = rng.uniform(-bound, bound, size=shape)
        else:
            value = np.zeros(shape)
        params[name] = value
    if spec.head.activation is Activation.RECTIFIER:
        params["head.b"] = np.full(1, RECTIFIER_HEAD_BIAS)
    return params


def check_params(spec: ModelSpec, params: Params) -> None:
    expected = param_shapes(spec)
    if list(params) != list(expected):
        raise NumericError(ErrorCode.SHAPE_MISMATCH, "parameter names or order differ from the model layout")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise NumericError(ErrorCode.SHAPE_MISMATCH, f"{name} has shape {params[name].shape}, expected {shape}")
        if not np.all(np.isfinite(params[name])):
            raise NumericError(ErrorCode.NON_FINITE_NUMERIC, f"{name} contains non-finite values")


# =============================================================================
# NETWORK
# =============================================================================

@dataclass(frozen=True)
class ForwardCache:
    """Everything backward() needs; only valid for the params it was built with."""
    token: int
    batch: int
    recurrent: Tuple[LSTMCache, ...]
    stack_outputs: Tuple[np.ndarray, ...]   # (B, n_f, H) after each stack
    dense: DenseCache
    head: DenseCache

    def shape_chain(self) -> Tuple[Tuple[int, ...], ...]:
        """Per-sample shapes: input, each stack, flatten, dense, head."""
        first = self.recurrent[0].x
        chain = [(first.shape[0], first.shape[2])]
        chain += [out.shape[1:] for out in self.stack_outputs]
        chain += [self.dense.x.shape[1:], self.dense.a.shape[1:], self.head.a.shape[1:]]
        return tuple(tuple(int(d) for d in s) for s in chain)


class Network:
    """
    Fixed-architecture recurrent regressor/classifier.

    forward() takes a batch (B, n_f, n_w), or one (n_f, n_w) matrix treated as
    a batch of one, and returns outputs of shape (B,).
    """

    def __init__(self, spec: ModelSpec, params: Optional[Params] = None, seed: int = 0):
        self._spec = spec
        self._token = 0
        self.set_params(params if params is not None else init_params(spec, seed))

    @property
    def spec(self) -> ModelSpec:
        return self._spec

    @property
    def params(self) -> Params:
        return self._params

    def set_params(self, params: Params) -> None:
        check_params(self._spec, params)
        frozen = {}
        for name, value in params.items():
            value = np.asarray(value, dtype=np.float64)
            if value.flags.writeable:
                value = value.copy()
                value.setflags(write=False)
            frozen[name] = value
        self._params = frozen
        self._token = next(_TOKENS)

    def _check_input(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim == 2:
            inputs = inputs[None]
        expected = (self._spec.n_features, self._spec.n_w)
        if inputs.ndim != 3 or inputs.shape[1:] != expected:
            raise DataError(
                ErrorCode.SHAPE_MISMATCH,
                f"input shape {inputs.shape[1:]} does not match model input {expected}",
            )
        if not np.all(np.isfinite(inputs)):
            raise NumericError(ErrorCode.NON_FINITE_NUMERIC, "input contains non-finite values")
        return inputs

    def forward(self, inputs: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
        inputs = self._check_input(inputs)
        p, spec = self._params, self._spec
        seq = inputs.transpose(1, 0, 2)        # channels become time steps
        recurrent: List[LSTMCache] = []
        stack_outputs = []
        for layer in range(spec.num_recurrent_layers):
            seq, cache = lstm_forward(seq, p[f"lstm{layer}.W"], p[f"lstm{layer}.U"], p[f"lstm{layer}.b"])
            if not np.all(np.isfinite(seq)):
                raise NumericError(ErrorCode.NON_FINITE_NUMERIC, "non-finite hidden state", layer=layer)
            recurrent.append(cache)
            if (layer + 1) % spec.layers_per_stack == 0:
                stack_outputs.append(seq.transpose(1, 0, 2))

        flat = stack_outputs[-1].reshape(inputs.shape[0], spec.flatten_size)
        hidden, dense_cache = dense_forward(flat, p["dense.W"], p["dense.b"], Activation.RECTIFIER)
        out, head_cache = dense_forward(hidden, p["head.W"], p["head.b"], spec.head.activation)
        if not np.all(np.isfinite(out)):
            raise NumericError(ErrorCode.NON_FINITE_NUMERIC, "non-finite network output")

        cache = ForwardCache(
            token=self._token,
            batch=inputs.shape[0],
            recurrent=tuple(recurrent),
            stack_outputs=tuple(stack_outputs),
            dense=dense_cache,
            head=head_cache,
        )
        return out[:, 0], cache

    def backward(self, cache: ForwardCache, d_out: np.ndarray) -> Params:
        """Gradients of the loss w.r.t. every parameter, given dLoss/dOutput of shape (B,)."""
        if cache.token != self._token:
            raise NumericError(ErrorCode.STALE_CACHE, "cache was built with different parameters")
        d_out = np.asarray(d_out, dtype=np.float64).reshape(-1)
        if d_out.shape != (cache.batch,):
            raise NumericError(ErrorCode.SHAPE_MISMATCH, "upstream gradient does not match batch size")
        p, spec = self._params, self._spec
        grads: Params = {}

        d_hidden, grads["head.W"], grads["head.b"] = dense_backward(d_out[:, None], cache.head, p["head.W"])
        d_flat, grads["dense.W"], grads["dense.b"] = dense_backward(d_hidden, cache.dense, p["dense.W"])

        d_seq = d_flat.reshape(cache.batch, spec.n_features, spec.hidden_size).transpose(1, 0, 2)
        for layer in reversed(range(spec.num_recurrent_layers)):
            d_seq, dW, dU, db = lstm_backward(
                d_seq, cache.recurrent[layer], p[f"lstm{layer}.W"], p[f"lstm{layer}.U"]
            )
            grads[f"lstm{layer}.W"], grads[f"lstm{layer}.U"], grads[f"lstm{layer}.b"] = dW, dU, db

        return {name: grads[name] for name in p}

    def predict(self, inputs: np.ndarray, batch_size: int = 512) -> np.ndarray:
        """Batched inference; no cache kept."""
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim == 2:
            inputs = inputs[None]
        if inputs.shape[0] == 0:
            return np.zeros(0)
        outputs = [self.forward(inputs[i:i + batch_size])[0] for i in range(0, inputs.shape[0], batch_size)]
        return np.concatenate(outputs)
