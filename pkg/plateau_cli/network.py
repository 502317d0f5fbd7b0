"""Multi-layer perceptron R² → R^(n+1) evaluated on second-order jets"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .autodiff import Jet2, Node, check_finite, raw
from .errors import ModelConfigError

ACTIVATIONS: dict[str, Callable[[Jet2], Jet2]] = {
    "tanh": Jet2.tanh,
    "silu": Jet2.silu,
}

INIT_SCHEMES = ("zero", "glorot_zero_head")


@dataclass(frozen=True)
class MlpArchitecture:
    """Layer widths d_0 = 2, d_1..d_{L-1} hidden, d_L = n + 1"""

    hidden_widths: tuple[int, ...]
    output_dim: int
    activation: str = "tanh"
    input_dim: int = 2

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim != 2:
            raise ModelConfigError(f"input_dim must be 2, got {self.input_dim}")
        if self.output_dim < 3:
            raise ModelConfigError(f"output_dim must be at least 3, got {self.output_dim}")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ModelConfigError(f"hidden widths must be positive, got {self.hidden_widths}")
        if self.activation not in ACTIVATIONS:
            raise ModelConfigError(
                f"unknown activation {self.activation!r}; choose from {sorted(ACTIVATIONS)}"
            )

    @classmethod
    def uniform(
        cls, ambient_dim: int = 3, width: int = 64, depth: int = 4, activation: str = "tanh"
    ) -> MlpArchitecture:
        """``depth`` hidden layers of equal ``width``; the default is (2,64,64,64,64,4)"""
        return cls((width,) * depth, ambient_dim + 1, activation)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_widths, self.output_dim)

    @property
    def ambient_dim(self) -> int:
        return self.output_dim - 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "input_dim": self.input_dim,
            "hidden_widths": list(self.hidden_widths),
            "output_dim": self.output_dim,
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> MlpArchitecture:
        return cls(
            tuple(data["hidden_widths"]),
            int(data["output_dim"]),
            data.get("activation", "tanh"),
            int(data.get("input_dim", 2)),
        )


@dataclass(frozen=True)
class LayerSlice:
    """Location of one affine layer inside the flat parameter vector"""

    layer: int
    weight: slice
    weight_shape: tuple[int, int]
    bias: slice


def parameter_layout(arch: MlpArchitecture) -> tuple[LayerSlice, ...]:
    """Per layer: W_l (d_{l+1} x d_l, row-major) followed by b_l"""
    slices = []
    offset = 0
    for layer, (d_in, d_out) in enumerate(zip(arch.dims[:-1], arch.dims[1:])):
        weight = slice(offset, offset + d_in * d_out)
        offset += d_in * d_out
        bias = slice(offset, offset + d_out)
        offset += d_out
        slices.append(LayerSlice(layer, weight, (d_out, d_in), bias))
    return tuple(slices)


def param_count(arch: MlpArchitecture) -> int:
    return sum(d_in * d_out + d_out for d_in, d_out in zip(arch.dims[:-1], arch.dims[1:]))


@dataclass
class ParameterVector:
    """The optimisation variable theta with its layer layout"""

    values: np.ndarray
    arch: MlpArchitecture
    layout: tuple[LayerSlice, ...] = field(init=False, repr=False)

    def __post_init__(self):
        self.values = np.array(self.values, dtype=np.float64).ravel()
        expected = param_count(self.arch)
        if self.values.size != expected:
            raise ModelConfigError(
                f"parameter vector has length {self.values.size}, architecture needs {expected}"
            )
        self.layout = parameter_layout(self.arch)

    def __len__(self) -> int:
        return self.values.size

    def unpack(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Copies of (W_l, b_l) for every layer"""
        return [
            (
                self.values[s.weight].reshape(s.weight_shape).copy(),
                self.values[s.bias].copy(),
            )
            for s in self.layout
        ]

    @classmethod
    def pack(
        cls, arch: MlpArchitecture, layers: list[tuple[np.ndarray, np.ndarray]]
    ) -> ParameterVector:
        layout = parameter_layout(arch)
        if len(layers) != len(layout):
            raise ModelConfigError(f"expected {len(layout)} layers, got {len(layers)}")
        values = np.zeros(param_count(arch))
        for s, (weight, bias) in zip(layout, layers):
            weight = np.asarray(weight, dtype=np.float64)
            bias = np.asarray(bias, dtype=np.float64)
            if weight.shape != s.weight_shape or bias.shape != (s.weight_shape[0],):
                raise ModelConfigError(f"layer {s.layer} has the wrong shape")
            values[s.weight] = weight.ravel()
            values[s.bias] = bias
        return cls(values, arch)

    def with_values(self, values: np.ndarray) -> ParameterVector:
        return ParameterVector(values, self.arch)

    def copy(self) -> ParameterVector:
        return ParameterVector(self.values.copy(), self.arch)


def init_params(
    arch: MlpArchitecture, scheme: str = "glorot_zero_head", seed: int = 0
) -> ParameterVector:
    """Initial parameters; ``glorot_zero_head`` keeps the output layer at zero"""
    values = np.zeros(param_count(arch))
    if scheme == "zero":
        return ParameterVector(values, arch)
    if scheme != "glorot_zero_head":
        raise ModelConfigError(f"unknown init scheme {scheme!r}; choose from {INIT_SCHEMES}")

    rng = np.random.default_rng(seed)
    for s in parameter_layout(arch)[:-1]:
        fan_out, fan_in = s.weight_shape
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        values[s.weight] = rng.uniform(-limit, limit, size=fan_in * fan_out)
    return ParameterVector(values, arch)


def _flat(params: ParameterVector | np.ndarray | Node, arch: MlpArchitecture):
    flat = params.values if isinstance(params, ParameterVector) else params
    size = np.size(raw(flat))
    if size != param_count(arch):
        raise ModelConfigError(
            f"parameter vector has length {size}, architecture needs {param_count(arch)}"
        )
    return flat


def _affine(h: Jet2, weight, bias) -> Jet2:
    wt = weight.T
    return Jet2(
        h.value @ wt + bias,
        *(c if isinstance(c, (int, float)) else c @ wt for c in h.components()[1:]),
    )


def forward(
    params: ParameterVector | np.ndarray | Node, arch: MlpArchitecture, x: Jet2, y: Jet2
) -> list[Jet2]:
    """Jets of all n+1 network outputs; index 0 is NN^X, 1..n are NN^Y"""
    flat = _flat(params, arch)
    activation = ACTIVATIONS[arch.activation]
    layout = parameter_layout(arch)
    batch_shape = np.shape(raw(x.value))

    def column(c):
        return c.reshape(-1, 1)

    xs, ys = x.map(column), y.map(column)

    first = layout[0]
    w0 = flat[first.weight].reshape(first.weight_shape)
    h = xs * w0[:, 0] + ys * w0[:, 1] + flat[first.bias]
    for s in layout[1:]:
        h = activation(h)
        h = _affine(h, flat[s.weight].reshape(s.weight_shape), flat[s.bias])

    outputs = []
    for j in range(arch.output_dim):
        out = h.map(lambda c, j=j: c[:, j].reshape(batch_shape))
        check_finite(raw(out.value), f"forward output {j}")
        outputs.append(out)
    return outputs
