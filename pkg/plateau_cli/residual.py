"""Tension field of a disc map into the half-space model and the training loss.

For u = (X, Y_1..Y_n) with target metric (dX^2 + |dY|^2)/X^2 the pulled-back
metric is g_ab = E_ab / X^2 with E_ab = sum_U d_aU d_bU. The components of
the tension field in the orthonormal frame (X d_X, X d_Yk) are

    tau_X  = (1/X) [Lap_g X + (1/X) (sum_k |dY_k|_g^2 - |dX|_g^2)]
    tau_Yk = (1/X) [Lap_g Y_k - (2/X) <dX, dY_k>_g]

with Lap_g f = g^ab f_ab + (d_a g^ab) f_b + g^ab (d_a log sqrt det g) f_b.

Every quantity is assembled from the jets of u with plain arithmetic, so the
same code runs on arrays (evaluation) and on tape nodes (training).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .autodiff import Jet2, Node, RecordedScalar, grad_wrt_params, raw, sum_
from .errors import DegenerateImmersionError
from .network import ParameterVector
from .surface import DEFAULT_CHUNK, ModelConfig, SurfaceJet, jet_at
from .utils import chunk_slices, parallel_map

DET_FLOOR = 1e-14

Sym2 = tuple[Any, Any, Any]


def _first(u: Jet2, a: int):
    return u.dx if a == 0 else u.dy


def _second(u: Jet2, a: int, b: int):
    if a == 0 and b == 0:
        return u.dxx
    if a == 1 and b == 1:
        return u.dyy
    return u.dxy


def _pairs():
    return ((0, 0), (0, 1), (1, 1))


def _contract(h: Sym2, v: tuple[Any, Any], w: tuple[Any, Any]):
    """h^ab v_a w_b for packed symmetric h"""
    return h[0] * v[0] * w[0] + h[1] * (v[0] * w[1] + v[1] * w[0]) + h[2] * v[1] * w[1]


def _sandwich(h: Sym2, d: Sym2) -> Sym2:
    """h d h for packed symmetric 2x2 matrices"""
    hd11 = h[0] * d[0] + h[1] * d[1]
    hd12 = h[0] * d[1] + h[1] * d[2]
    hd21 = h[1] * d[0] + h[2] * d[1]
    hd22 = h[1] * d[1] + h[2] * d[2]
    return (hd11 * h[0] + hd12 * h[1], hd11 * h[1] + hd12 * h[2], hd21 * h[1] + hd22 * h[2])


@dataclass(frozen=True, eq=False)
class PullbackMetric:
    """g, its inverse and first derivatives, packed as (11, 12, 22)"""

    g: Sym2
    g_inv: Sym2
    det: Any
    dg: tuple[Sym2, Sym2]
    dg_inv: tuple[Sym2, Sym2]
    dlog_sqrt_det: tuple[Any, Any]

    @staticmethod
    def _matrix(packed: Sym2) -> np.ndarray:
        a, b, c = (np.asarray(raw(v), dtype=np.float64) for v in packed)
        a, b, c = np.broadcast_arrays(a, b, c)
        return np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)

    def matrix(self) -> np.ndarray:
        return self._matrix(self.g)

    def inverse_matrix(self) -> np.ndarray:
        return self._matrix(self.g_inv)

    def derivative_matrices(self) -> np.ndarray:
        """d_a g_bc with shape ``batch + (2, 2, 2)``, index order (a, b, c)"""
        return np.stack([self._matrix(d) for d in self.dg], axis=-3)


@dataclass(frozen=True, eq=False)
class TensionResidual:
    tau_X: Any
    tau_Y: tuple[Any, ...]
    sq_norm: Any

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(tau_X, tau_Y stacked on the last axis, sq_norm) as plain arrays"""
        return (
            np.asarray(raw(self.tau_X)),
            np.stack([np.asarray(raw(t)) for t in self.tau_Y], axis=-1),
            np.asarray(raw(self.sq_norm)),
        )


def pullback_metric(jet: SurfaceJet, points: np.ndarray | None = None) -> PullbackMetric:
    """Pull-back of the half-space metric along u; raises on degenerate points"""
    comps = jet.components
    X = jet.X.value

    E = tuple(sum(_first(u, a) * _first(u, b) for u in comps) for a, b in _pairs())
    dE = tuple(
        tuple(
            sum(
                _second(u, c, a) * _first(u, b) + _first(u, a) * _second(u, c, b)
                for u in comps
            )
            for a, b in _pairs()
        )
        for c in (0, 1)
    )

    inv_x2 = 1.0 / (X * X)
    g = tuple(e * inv_x2 for e in E)
    dX = (jet.X.dx, jet.X.dy)
    dg = tuple(
        tuple(de * inv_x2 - 2.0 * e * dX[c] * inv_x2 / X for de, e in zip(dE[c], E))
        for c in (0, 1)
    )

    det = g[0] * g[2] - g[1] * g[1]
    bad = np.asarray(raw(det)) <= DET_FLOOR
    if np.any(bad):
        where = np.asarray(points)[bad] if points is not None else np.argwhere(bad)
        raise DegenerateImmersionError(where, DET_FLOOR)

    inv_det = 1.0 / det
    g_inv = (g[2] * inv_det, -g[1] * inv_det, g[0] * inv_det)
    dg_inv = tuple(tuple(-v for v in _sandwich(g_inv, dg[c])) for c in (0, 1))
    # d_a log sqrt(det g) = tr(g^-1 d_a g) / 2
    dlog = tuple(
        0.5 * (g_inv[0] * dg[c][0] + 2.0 * g_inv[1] * dg[c][1] + g_inv[2] * dg[c][2])
        for c in (0, 1)
    )
    return PullbackMetric(g, g_inv, det, dg, dg_inv, dlog)


def laplace_beltrami(f: Jet2, metric: PullbackMetric):
    h = metric.g_inv
    second = h[0] * f.dxx + 2.0 * h[1] * f.dxy + h[2] * f.dyy
    div_x = metric.dg_inv[0][0] + metric.dg_inv[1][1]
    div_y = metric.dg_inv[0][1] + metric.dg_inv[1][2]
    lx, ly = metric.dlog_sqrt_det
    first = (div_x + h[0] * lx + h[1] * ly) * f.dx + (div_y + h[1] * lx + h[2] * ly) * f.dy
    return second + first


def tension(jet: SurfaceJet, points: np.ndarray | None = None) -> TensionResidual:
    metric = pullback_metric(jet, points)
    h = metric.g_inv
    X = jet.X.value
    inv_x = 1.0 / X
    dX = jet.X.grad

    sq_dY = sum(_contract(h, Yk.grad, Yk.grad) for Yk in jet.Y)
    tau_X = inv_x * (laplace_beltrami(jet.X, metric) + inv_x * (sq_dY - _contract(h, dX, dX)))
    tau_Y = tuple(
        inv_x * (laplace_beltrami(Yk, metric) - 2.0 * inv_x * _contract(h, dX, Yk.grad))
        for Yk in jet.Y
    )
    sq_norm = tau_X * tau_X + sum(t * t for t in tau_Y)
    return TensionResidual(tau_X, tau_Y, sq_norm)


def _sq_norm(config: ModelConfig, params, points: np.ndarray):
    return tension(jet_at(config, params, points), points).sq_norm


def loss(
    config: ModelConfig, params: ParameterVector | np.ndarray, sample: np.ndarray
) -> RecordedScalar:
    """Mean squared tension over ``sample``, recorded for ``grad_wrt_params``"""
    values = params.values if isinstance(params, ParameterVector) else params
    leaf = Node.leaf(values)
    sample = np.asarray(sample, dtype=np.float64).reshape(-1, 2)
    total = sum_(_sq_norm(config, leaf, sample))
    return RecordedScalar(total / float(sample.shape[0]), leaf)


def loss_and_grad(
    config: ModelConfig,
    params: ParameterVector | np.ndarray,
    sample: np.ndarray,
    chunk_size: int = DEFAULT_CHUNK,
    threads: int = 1,
) -> tuple[float, np.ndarray]:
    """Mean loss and its parameter gradient, reduced chunk by chunk in order"""
    values = params.values if isinstance(params, ParameterVector) else np.asarray(params)
    sample = np.asarray(sample, dtype=np.float64).reshape(-1, 2)

    def run(s: slice) -> tuple[float, np.ndarray]:
        leaf = Node.leaf(values)
        recorded = RecordedScalar(sum_(_sq_norm(config, leaf, sample[s])), leaf)
        value = recorded.value
        return value, grad_wrt_params(recorded)

    parts = parallel_map(run, chunk_slices(sample.shape[0], chunk_size), threads)
    total = 0.0
    grad = np.zeros_like(values, dtype=np.float64)
    for value, g in parts:
        total += value
        grad += g
    n = float(sample.shape[0])
    return total / n, grad / n


def sq_norm_field(
    config: ModelConfig,
    params: ParameterVector | np.ndarray,
    points: np.ndarray,
    chunk_size: int = DEFAULT_CHUNK,
    threads: int = 1,
) -> np.ndarray:
    """Pointwise squared tension norm, no recording"""
    values = params.values if isinstance(params, ParameterVector) else np.asarray(params)
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    parts = parallel_map(
        lambda s: np.asarray(_sq_norm(config, values, points[s]), dtype=np.float64),
        chunk_slices(points.shape[0], chunk_size),
        threads,
    )
    return np.concatenate(parts) if parts else np.empty(0)


def loss_value(
    config: ModelConfig,
    params: ParameterVector | np.ndarray,
    sample: np.ndarray,
    chunk_size: int = DEFAULT_CHUNK,
    threads: int = 1,
) -> float:
    values = params.values if isinstance(params, ParameterVector) else np.asarray(params)
    sample = np.asarray(sample, dtype=np.float64).reshape(-1, 2)
    sums = parallel_map(
        lambda s: float(np.sum(_sq_norm(config, values, sample[s]))),
        chunk_slices(sample.shape[0], chunk_size),
        threads,
    )
    total = 0.0
    for part in sums:
        total += part
    return total / float(sample.shape[0])
