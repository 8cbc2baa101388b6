"""Small dense networks stored as flat float64 parameter vectors.

All weights and biases of a network live in one flat array so the same
parameters can be stepped by Adam and resampled by the cross-entropy
search without any conversion. Forward and backward passes are exact
closed-form implementations (no autodiff framework).

Flat layout (load-bearing for the evolutionary statistics): layers in
order, each layer contributing its weight matrix in row-major order
(shape ``(output_size, input_size)``) followed by its bias vector.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

ACTIVATIONS = ("tanh", "linear", "scaled_tanh")


@dataclass(frozen=True)
class LayerSpec:
    """One affine layer plus activation.

    ``scaled_tanh`` squashes to [-bound, +bound]; ``bound`` is ignored by
    the other activations.
    """

    input_size: int
    output_size: int
    activation: str = "tanh"
    bound: float = 0.0

    def __post_init__(self) -> None:
        if self.input_size < 1 or self.output_size < 1:
            raise ValueError(
                f"layer sizes must be >= 1, got {self.input_size}->{self.output_size}"
            )
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.activation == "scaled_tanh" and not self.bound > 0.0:
            raise ValueError("scaled_tanh requires a positive bound")

    @property
    def param_count(self) -> int:
        return self.input_size * self.output_size + self.output_size


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered stack of layers; consecutive layers must be dimension-compatible."""

    layers: tuple[LayerSpec, ...]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("network needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        for prev, cur in zip(self.layers, self.layers[1:]):
            if prev.output_size != cur.input_size:
                raise ValueError(
                    f"incompatible layer chain: {prev.output_size} -> {cur.input_size}"
                )

    @property
    def input_size(self) -> int:
        return self.layers[0].input_size

    @property
    def output_size(self) -> int:
        return self.layers[-1].output_size

    @property
    def param_count(self) -> int:
        return sum(layer.param_count for layer in self.layers)


def mlp_spec(
    sizes: Sequence[int],
    hidden_activation: str = "tanh",
    output_activation: str = "linear",
    output_bound: float = 0.0,
) -> NetworkSpec:
    """Build a NetworkSpec from a list of layer widths, e.g. [48, 64, 64, 8]."""
    if len(sizes) < 2:
        raise ValueError("need at least an input and an output size")
    layers = []
    for i, (n_in, n_out) in enumerate(zip(sizes, sizes[1:])):
        last = i == len(sizes) - 2
        layers.append(
            LayerSpec(
                n_in,
                n_out,
                activation=output_activation if last else hidden_activation,
                bound=output_bound if last else 0.0,
            )
        )
    return NetworkSpec(tuple(layers))


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Immutable flat parameter array tied to the spec that shapes it."""

    values: np.ndarray
    spec: NetworkSpec

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64).ravel()
        if values.size != self.spec.param_count:
            raise ValueError(
                f"parameter length {values.size} does not match spec "
                f"({self.spec.param_count})"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _layer_views(values: np.ndarray, spec: NetworkSpec):
    """Yield (weights, bias) views into the flat array, layer by layer."""
    offset = 0
    for layer in spec.layers:
        n_w = layer.input_size * layer.output_size
        w = values[offset : offset + n_w].reshape(layer.output_size, layer.input_size)
        b = values[offset + n_w : offset + n_w + layer.output_size]
        offset += layer.param_count
        yield w, b


def init_network(spec: NetworkSpec, seed: int) -> ParamVector:
    """Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero."""
    rng = np.random.default_rng(seed)
    chunks = []
    for layer in spec.layers:
        scale = 1.0 / np.sqrt(layer.input_size)
        w = rng.uniform(-scale, scale, size=(layer.output_size, layer.input_size))
        chunks.append(w.ravel())
        chunks.append(np.zeros(layer.output_size))
    return ParamVector(np.concatenate(chunks), spec)


def _activate(z: np.ndarray, layer: LayerSpec) -> np.ndarray:
    if layer.activation == "tanh":
        return np.tanh(z)
    if layer.activation == "scaled_tanh":
        return layer.bound * np.tanh(z)
    return z


def _activation_grad(y: np.ndarray, layer: LayerSpec) -> np.ndarray:
    # Expressed through the layer output y, which is cheaper than keeping z.
    if layer.activation == "tanh":
        return 1.0 - y * y
    if layer.activation == "scaled_tanh":
        return layer.bound - y * y / layer.bound
    return np.ones_like(y)


def _as_batch(x, size: int, what: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != size:
        raise ValueError(f"{what} has shape {np.shape(x)}, expected (..., {size})")
    return arr, single


def forward(params: ParamVector, inputs) -> np.ndarray:
    """Evaluate the network. Accepts a single input vector or a batch."""
    x, single = _as_batch(inputs, params.spec.input_size, "input")
    for (w, b), layer in zip(_layer_views(params.values, params.spec), params.spec.layers):
        x = _activate(x @ w.T + b, layer)
    return x[0] if single else x


def backward(params: ParamVector, inputs, output_grad) -> tuple[np.ndarray, np.ndarray]:
    """Exact reverse-mode gradients of the forward map.

    Returns ``(param_grad, input_grad)`` where ``param_grad`` is a flat
    array in the documented layout (summed over the batch) and
    ``input_grad`` matches the shape of ``inputs``. The input gradient is
    what lets an actor update chain through a critic's action input.
    """
    spec = params.spec
    x, single = _as_batch(inputs, spec.input_size, "input")
    layer_inputs = []
    layer_outputs = []
    h = x
    for (w, b), layer in zip(_layer_views(params.values, spec), spec.layers):
        layer_inputs.append(h)
        h = _activate(h @ w.T + b, layer)
        layer_outputs.append(h)

    g, g_single = _as_batch(output_grad, spec.output_size, "output gradient")
    if single != g_single or g.shape[0] != x.shape[0]:
        raise ValueError("output gradient batch does not match input batch")

    param_grad = np.empty(spec.param_count)
    offset = spec.param_count
    views = list(_layer_views(params.values, spec))
    for idx in range(len(spec.layers) - 1, -1, -1):
        layer = spec.layers[idx]
        w, _ = views[idx]
        dz = g * _activation_grad(layer_outputs[idx], layer)
        n_w = layer.input_size * layer.output_size
        offset -= layer.param_count
        param_grad[offset : offset + n_w] = (dz.T @ layer_inputs[idx]).ravel()
        param_grad[offset + n_w : offset + n_w + layer.output_size] = dz.sum(axis=0)
        g = dz @ w
    return param_grad, (g[0] if single else g)


def flatten(params: ParamVector) -> np.ndarray:
    """Writable copy of the flat parameter array."""
    return params.values.copy()


def unflatten(spec: NetworkSpec, values) -> ParamVector:
    return ParamVector(np.asarray(values, dtype=np.float64), spec)


@dataclass(frozen=True, eq=False)
class AdamState:
    """Adam moment estimates for one parameter vector."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("beta coefficients must lie in (0, 1)")
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        if self.step_count < 0:
            raise ValueError("step_count must be non-negative")
        if self.first_moment.shape != self.second_moment.shape:
            raise ValueError("moment arrays must have matching shapes")


def init_adam(param_count: int, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    return AdamState(np.zeros(param_count), np.zeros(param_count),
                     0, beta1, beta2, eps)


def adam_step(params: ParamVector, grads, state: AdamState,
              lr: float) -> tuple[ParamVector, AdamState]:
    """One bias-corrected Adam descent step; refuses non-finite gradients."""
    g = np.asarray(grads, dtype=np.float64).ravel()
    if g.size != params.values.size or g.size != state.first_moment.size:
        raise ValueError("gradient length does not match parameters")
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient: update refused")
    t = state.step_count + 1
    m = state.beta1 * state.first_moment + (1.0 - state.beta1) * g
    v = state.beta2 * state.second_moment + (1.0 - state.beta2) * g * g
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    new_values = params.values - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return ParamVector(new_values, params.spec), replace(
        state, first_moment=m, second_moment=v, step_count=t
    )


def polyak_blend(target: ParamVector, source: ParamVector, tau: float) -> ParamVector:
    """target' = (1 - tau) * target + tau * source, componentwise."""
    if target.spec != source.spec:
        raise ValueError("polyak blend requires matching network specs")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    return ParamVector((1.0 - tau) * target.values + tau * source.values, target.spec)
