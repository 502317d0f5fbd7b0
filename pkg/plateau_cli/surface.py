"""The composite disc map u = (rho * exp(NN^X), ext(gamma) + rho^k * NN^Y).

The map sends the closed unit disc to the half-space model of hyperbolic
(n+1)-space. By construction X vanishes on the unit circle and Y restricts
to the boundary curve there, whatever the network parameters are.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Protocol

import numpy as np

from .autodiff import Jet2, Node, jet_input, raw
from .boundary import (
    EXTENSION_KINDS,
    RHO_KINDS,
    ExtensionField,
    KnotCurve,
    build_extension,
    eval_extension,
    r_squared,
    rho,
)
from .errors import JetDomainError, ModelConfigError
from .network import MlpArchitecture, ParameterVector, forward
from .utils import chunk_slices, parallel_map

BOUNDARY_SNAP = 1e-12
DEFAULT_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class ModelConfig:
    """The fixed ingredients (gamma, rho, ext, k, architecture) of a surface model"""

    curve: KnotCurve
    rho_kind: str = "stereographic"
    ext_kind: str = "stereobiharmonic"
    k: int = 2
    arch: MlpArchitecture | None = None
    extension: ExtensionField = field(init=False, repr=False)

    def __post_init__(self):
        if self.rho_kind not in RHO_KINDS:
            raise ModelConfigError(f"unknown rho kind {self.rho_kind!r}; choose from {RHO_KINDS}")
        if self.ext_kind not in EXTENSION_KINDS:
            raise ModelConfigError(
                f"unknown extension kind {self.ext_kind!r}; choose from {EXTENSION_KINDS}"
            )
        if self.k not in (1, 2):
            raise ModelConfigError(f"k must be 1 or 2, got {self.k}")
        if self.k == 2 and self.ext_kind != "stereobiharmonic":
            raise ModelConfigError(
                "k=2 requires the stereobiharmonic extension "
                "(the image is only orthogonal to the boundary in that case)"
            )
        arch = self.arch or MlpArchitecture.uniform(self.curve.ambient_dim)
        if arch.output_dim != self.curve.ambient_dim + 1:
            raise ModelConfigError(
                f"network output_dim {arch.output_dim} does not match curve ambient_dim "
                f"{self.curve.ambient_dim} + 1"
            )
        object.__setattr__(self, "arch", arch)
        object.__setattr__(self, "extension", build_extension(self.curve, self.ext_kind))

    @property
    def ambient_dim(self) -> int:
        return self.curve.ambient_dim

    def describe(self) -> dict[str, Any]:
        return {
            "knot": self.curve.label,
            "ambient_dim": self.ambient_dim,
            "rho_kind": self.rho_kind,
            "ext_kind": self.ext_kind,
            "k": self.k,
            "architecture": "-".join(str(d) for d in self.arch.dims),
            "activation": self.arch.activation,
        }


@dataclass(frozen=True)
class HalfSpacePoint:
    """A point (X, Y) of the half-space model, X >= 0"""

    X: float
    Y: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.X], self.Y])


@dataclass(frozen=True, eq=False)
class SurfaceJet:
    """Second-order jets of X and Y_1..Y_n at a batch of disc points"""

    X: Jet2
    Y: tuple[Jet2, ...]

    @property
    def components(self) -> tuple[Jet2, ...]:
        return (self.X, *self.Y)

    def values(self) -> np.ndarray:
        """Shape ``batch + (n+1,)``"""
        return np.stack([c.arrays()[0] for c in self.components], axis=-1)

    def jacobian(self) -> np.ndarray:
        """Shape ``batch + (n+1, 2)``, columns d/dx and d/dy"""
        return np.stack(
            [np.stack(c.arrays()[1:3], axis=-1) for c in self.components], axis=-2
        )

    def hessian(self) -> np.ndarray:
        """Packed (xx, xy, yy), shape ``batch + (n+1, 3)``"""
        return np.stack(
            [np.stack(c.arrays()[3:6], axis=-1) for c in self.components], axis=-2
        )


def _params_for(config: ModelConfig, params: ParameterVector | np.ndarray | Node):
    if isinstance(params, ParameterVector):
        if params.arch != config.arch:
            raise ModelConfigError("parameter vector architecture does not match the model")
        return params.values
    return params


def evaluate_jet(
    config: ModelConfig,
    params: ParameterVector | np.ndarray | Node,
    x: Jet2,
    y: Jet2,
    allow_boundary: bool = False,
) -> SurfaceJet:
    """Jets of every component of u at (x, y)"""
    r2 = raw(r_squared(x, y).value)
    if np.any(r2 > 1.0) or (not allow_boundary and np.any(r2 >= 1.0)):
        raise JetDomainError(
            "evaluate_jet",
            "points must lie in the open unit disc (closed disc with allow_boundary)",
        )
    flat = _params_for(config, params)
    rho_jet = rho(config.rho_kind, x, y)
    nn = forward(flat, config.arch, x, y)
    ext = eval_extension(config.extension, x, y)
    multiplier = rho_jet.powi(config.k)
    X = rho_jet * nn[0].exp()
    Y = tuple(ext[i] + multiplier * nn[i + 1] for i in range(config.ambient_dim))
    return SurfaceJet(X, Y)


def jet_at(
    config: ModelConfig,
    params: ParameterVector | np.ndarray | Node,
    points: np.ndarray,
    allow_boundary: bool = False,
) -> SurfaceJet:
    points = np.asarray(points, dtype=np.float64)
    return evaluate_jet(
        config,
        params,
        jet_input("x", points[..., 0]),
        jet_input("y", points[..., 1]),
        allow_boundary=allow_boundary,
    )


def _values_chunk(config: ModelConfig, flat, points: np.ndarray) -> np.ndarray:
    out = np.empty((points.shape[0], config.ambient_dim + 1))
    r2 = np.sum(points * points, axis=1)
    if np.any(r2 > 1.0 + BOUNDARY_SNAP):
        raise JetDomainError("evaluate", "points must lie in the closed unit disc")
    on_boundary = np.abs(r2 - 1.0) <= BOUNDARY_SNAP
    if np.any(on_boundary):
        b = points[on_boundary]
        out[on_boundary, 0] = 0.0
        out[on_boundary, 1:] = config.curve.evaluate(np.arctan2(b[:, 1], b[:, 0]))
    inner = ~on_boundary
    if np.any(inner):
        p = points[inner]
        # value-only jets: derivative slots stay literal zeros
        jet = evaluate_jet(config, flat, Jet2(p[:, 0]), Jet2(p[:, 1]), allow_boundary=True)
        out[inner] = jet.values()
    return out


def evaluate_points(
    config: ModelConfig,
    params: ParameterVector | np.ndarray,
    points: np.ndarray,
    chunk_size: int = DEFAULT_CHUNK,
    threads: int = 1,
) -> np.ndarray:
    """u at an (M, 2) array of closed-disc points, shape (M, n+1)"""
    flat = raw(_params_for(config, params))
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    chunks = parallel_map(
        lambda s: _values_chunk(config, flat, points[s]),
        chunk_slices(points.shape[0], chunk_size),
        threads,
    )
    if not chunks:
        return np.empty((0, config.ambient_dim + 1))
    return np.concatenate(chunks, axis=0)


def evaluate(
    config: ModelConfig, params: ParameterVector | np.ndarray, point: tuple[float, float]
) -> HalfSpacePoint:
    value = evaluate_points(config, params, np.asarray(point, dtype=np.float64)[None, :])[0]
    return HalfSpacePoint(float(value[0]), value[1:].copy())


def jacobian_points(
    config: ModelConfig,
    params: ParameterVector | np.ndarray,
    points: np.ndarray,
    chunk_size: int = DEFAULT_CHUNK,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Values (M, n+1) and Jacobians (M, n+1, 2) at open-disc points"""
    flat = raw(_params_for(config, params))
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)

    def run(s: slice) -> tuple[np.ndarray, np.ndarray]:
        jet = jet_at(config, flat, points[s])
        return jet.values(), jet.jacobian()

    results = parallel_map(run, chunk_slices(points.shape[0], chunk_size), threads)
    if not results:
        d = config.ambient_dim + 1
        return np.empty((0, d)), np.empty((0, d, 2))
    return (
        np.concatenate([v for v, _ in results], axis=0),
        np.concatenate([j for _, j in results], axis=0),
    )


def to_ball_model(p: HalfSpacePoint | np.ndarray) -> np.ndarray:
    """Inverse stereographic projection of the half-space model onto the unit ball"""
    arr = p.as_array() if isinstance(p, HalfSpacePoint) else np.asarray(p, dtype=np.float64)
    X, Y = arr[..., 0], arr[..., 1:]
    y2 = np.sum(Y * Y, axis=-1)
    denom = (X + 1.0) ** 2 + y2
    head = (X * X + y2 - 1.0) / denom
    return np.concatenate([head[..., None], 2.0 * Y / denom[..., None]], axis=-1)


class SurfaceMap(Protocol):
    """A map from the disc to R^d with first derivatives"""

    dim: int

    def points(self, p: np.ndarray) -> np.ndarray: ...

    def jacobians(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


class ModelSurface:
    """Adapter exposing a trained model as a ``SurfaceMap``"""

    def __init__(
        self,
        config: ModelConfig,
        params: ParameterVector | np.ndarray,
        chunk_size: int = DEFAULT_CHUNK,
        threads: int = 1,
    ):
        self.config = config
        self.params = params
        self.chunk_size = chunk_size
        self.threads = threads
        self.dim = config.ambient_dim + 1

    def points(self, p: np.ndarray) -> np.ndarray:
        return evaluate_points(self.config, self.params, p, self.chunk_size, self.threads)

    def jacobians(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return jacobian_points(self.config, self.params, p, self.chunk_size, self.threads)
