"""Analytic disc immersions into R^4 with known transverse double points.

The crossing fixtures have the form

    u(x, y) = (x^2, kappa q(x), y, s x y)

with q odd. Points (x, y) and (-x, y) share the first and third coordinates,
so u(p) = u(p') off the diagonal exactly when q(x) = 0 and y = 0. Each
nonzero root r of q therefore gives one double point with preimages
(r, 0) and (-r, 0), and its sign is sign(s q'(r)).
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import PlateauError

CROSSING_A = 0.375
CROSSING_B = 0.75


@dataclass(frozen=True)
class KnownDoublePoint:
    p1: tuple[float, float]
    p2: tuple[float, float]
    sign: int


@dataclass(frozen=True, eq=False)
class CrossingFixture:
    """u = (x^2, kappa q(x), y, s x y) for an odd polynomial q"""

    name: str
    q: Callable[[np.ndarray], np.ndarray]
    dq: Callable[[np.ndarray], np.ndarray]
    roots: tuple[float, ...]
    kappa: float = 4.0
    s: float = 1.0
    dim: int = 4

    def points(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64).reshape(-1, 2)
        x, y = p[:, 0], p[:, 1]
        return np.stack([x * x, self.kappa * self.q(x), y, self.s * x * y], axis=1)

    def jacobians(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = np.asarray(p, dtype=np.float64).reshape(-1, 2)
        x, y = p[:, 0], p[:, 1]
        zero, one = np.zeros_like(x), np.ones_like(x)
        jac = np.stack(
            [
                np.stack([2.0 * x, zero], axis=1),
                np.stack([self.kappa * self.dq(x), zero], axis=1),
                np.stack([zero, one], axis=1),
                np.stack([self.s * y, self.s * x], axis=1),
            ],
            axis=1,
        )
        return self.points(p), jac

    @property
    def double_points(self) -> tuple[KnownDoublePoint, ...]:
        out = []
        for r in self.roots:
            sign = int(np.sign(self.s * self.kappa * float(self.dq(np.array([r]))[0])))
            out.append(KnownDoublePoint((-r, 0.0), (r, 0.0), sign))
        return tuple(out)

    @property
    def self_intersection_number(self) -> int:
        return sum(d.sign for d in self.double_points)


@dataclass(frozen=True)
class EmbeddedFixture:
    """The injective affine disc (x, y) -> (0.1, x, y, 0)"""

    name: str = "embedded"
    dim: int = 4

    def points(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64).reshape(-1, 2)
        zero = np.zeros(p.shape[0])
        return np.stack([zero + 0.1, p[:, 0], p[:, 1], zero], axis=1)

    def jacobians(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = np.asarray(p, dtype=np.float64).reshape(-1, 2)
        jac = np.zeros((p.shape[0], 4, 2))
        jac[:, 1, 0] = 1.0
        jac[:, 2, 1] = 1.0
        return self.points(p), jac

    @property
    def double_points(self) -> tuple[KnownDoublePoint, ...]:
        return ()

    @property
    def self_intersection_number(self) -> int:
        return 0


def _cubic(a: float):
    return (lambda x: x * (x * x - a * a), lambda x: 3.0 * x * x - a * a)


def _quintic(a: float, b: float):
    def q(x):
        return x * (x * x - a * a) * (x * x - b * b)

    def dq(x):
        x2 = x * x
        return (x2 - a * a) * (x2 - b * b) + 2.0 * x2 * (2.0 * x2 - a * a - b * b)

    return q, dq


def one_crossing(a: float = CROSSING_A) -> CrossingFixture:
    q, dq = _cubic(a)
    return CrossingFixture("one_crossing", q, dq, (a,))


def one_crossing_mirror(a: float = CROSSING_A) -> CrossingFixture:
    q, dq = _cubic(a)
    return CrossingFixture("one_crossing_mirror", q, dq, (a,), s=-1.0)


def two_crossing(a: float = CROSSING_A, b: float = CROSSING_B) -> CrossingFixture:
    q, dq = _quintic(a, b)
    return CrossingFixture("two_crossing", q, dq, (a, b), kappa=8.0)


FIXTURES = {
    "embedded": EmbeddedFixture,
    "one_crossing": one_crossing,
    "one_crossing_mirror": one_crossing_mirror,
    "two_crossing": two_crossing,
}


def get_fixture(name: str) -> CrossingFixture | EmbeddedFixture:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise PlateauError(
            f"unknown fixture {name!r}; choose from {', '.join(sorted(FIXTURES))}"
        ) from None
