"""Optimisers on flat parameter vectors: Adam, strong Wolfe line search, L-BFGS"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .errors import LineSearchError

logger = logging.getLogger(__name__)

FunGrad = Callable[[np.ndarray], tuple[float, np.ndarray]]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
WOLFE_C1 = 1e-4
WOLFE_C2 = 0.9


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> AdamState:
        return cls(np.zeros(size), np.zeros(size))


def adam_update(
    params: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> np.ndarray:
    """One bias-corrected Adam step; updates ``state`` and returns the new parameters"""
    state.t += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1**state.t)
    v_hat = state.v / (1.0 - beta2**state.t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps)


def _cubicmin(a, fa, fpa, b, fb, c, fc):
    """Minimiser of the cubic through (a, fa), (b, fb), (c, fc) with slope fpa at a"""
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            C = fpa
            db = b - a
            dc = c - a
            denom = (db * dc) ** 2 * (db - dc)
            d1 = np.array([[dc**2, -(db**2)], [-(dc**3), db**3]])
            A, B = d1 @ np.array([fb - fa - C * db, fc - fa - C * dc])
            A /= denom
            B /= denom
            radical = B * B - 3 * A * C
            xmin = a + (-B + np.sqrt(radical)) / (3 * A)
        except ArithmeticError:
            return None
    if not np.isfinite(xmin):
        return None
    return float(xmin)


def _quadmin(a, fa, fpa, b, fb):
    """Minimiser of the quadratic through (a, fa), (b, fb) with slope fpa at a"""
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            db = b - a
            B = (fb - fa - fpa * db) / (db * db)
            xmin = a - fpa / (2.0 * B)
        except ArithmeticError:
            return None
    if not np.isfinite(xmin):
        return None
    return float(xmin)


@dataclass
class LineSearchResult:
    alpha: float
    f: float
    g: np.ndarray
    evaluations: int


class _Phi:
    """phi(alpha) = f(x + alpha d) with cached (value, gradient) evaluations"""

    def __init__(self, fun_and_grad: FunGrad, x: np.ndarray, d: np.ndarray):
        self.fun_and_grad = fun_and_grad
        self.x = x
        self.d = d
        self.cache: dict[float, tuple[float, np.ndarray]] = {}

    def _eval(self, alpha: float) -> tuple[float, np.ndarray]:
        if alpha not in self.cache:
            f, g = self.fun_and_grad(self.x + alpha * self.d)
            self.cache[alpha] = (float(f), np.asarray(g, dtype=np.float64))
        return self.cache[alpha]

    def value(self, alpha: float) -> float:
        return self._eval(alpha)[0]

    def slope(self, alpha: float) -> float:
        return float(self._eval(alpha)[1] @ self.d)

    def result(self, alpha: float) -> LineSearchResult:
        f, g = self._eval(alpha)
        return LineSearchResult(alpha, f, g, len(self.cache))


def _zoom(phi: _Phi, a_lo, a_hi, phi_lo, phi_hi, derphi_lo, phi0, derphi0, c1, c2, maxiter):
    delta1 = 0.2  # cubic interpolant check
    delta2 = 0.1  # quadratic interpolant check
    phi_rec, a_rec = phi0, 0.0
    for i in range(maxiter):
        dalpha = a_hi - a_lo
        a, b = (a_hi, a_lo) if dalpha < 0 else (a_lo, a_hi)

        a_j = None
        if i > 0:
            cchk = delta1 * dalpha
            a_j = _cubicmin(a_lo, phi_lo, derphi_lo, a_hi, phi_hi, a_rec, phi_rec)
        if i == 0 or a_j is None or a_j > b - cchk or a_j < a + cchk:
            qchk = delta2 * dalpha
            a_j = _quadmin(a_lo, phi_lo, derphi_lo, a_hi, phi_hi)
            if a_j is None or a_j > b - qchk or a_j < a + qchk:
                a_j = a_lo + 0.5 * dalpha

        phi_aj = phi.value(a_j)
        if phi_aj > phi0 + c1 * a_j * derphi0 or phi_aj >= phi_lo:
            phi_rec, a_rec = phi_hi, a_hi
            a_hi, phi_hi = a_j, phi_aj
            continue

        derphi_aj = phi.slope(a_j)
        if abs(derphi_aj) <= -c2 * derphi0:
            return a_j
        if derphi_aj * (a_hi - a_lo) >= 0:
            phi_rec, a_rec = phi_hi, a_hi
            a_hi, phi_hi = a_lo, phi_lo
        else:
            phi_rec, a_rec = phi_lo, a_lo
        a_lo, phi_lo, derphi_lo = a_j, phi_aj, derphi_aj
    return None


def strong_wolfe(
    fun_and_grad: FunGrad,
    x: np.ndarray,
    d: np.ndarray,
    f0: float,
    g0: np.ndarray,
    alpha1: float = 1.0,
    c1: float = WOLFE_C1,
    c2: float = WOLFE_C2,
    maxiter: int = 20,
) -> LineSearchResult | None:
    """Step length satisfying the strong Wolfe conditions along descent direction ``d``.

    Bracketing by doubling followed by cubic/quadratic interpolation zoom
    (Nocedal and Wright, Algorithms 3.5 and 3.6). Returns None on failure.
    """
    phi = _Phi(fun_and_grad, x, d)
    phi.cache[0.0] = (float(f0), np.asarray(g0, dtype=np.float64))
    derphi0 = float(g0 @ d)
    if derphi0 >= 0:
        return None

    alpha0, phi_a0, derphi_a0 = 0.0, float(f0), derphi0
    for i in range(maxiter):
        if alpha1 == 0:
            return None
        phi_a1 = phi.value(alpha1)
        if phi_a1 > f0 + c1 * alpha1 * derphi0 or (i > 0 and phi_a1 >= phi_a0):
            alpha = _zoom(
                phi, alpha0, alpha1, phi_a0, phi_a1, derphi_a0, f0, derphi0, c1, c2, maxiter
            )
            return None if alpha is None else phi.result(alpha)

        derphi_a1 = phi.slope(alpha1)
        if abs(derphi_a1) <= -c2 * derphi0:
            return phi.result(alpha1)
        if derphi_a1 >= 0:
            alpha = _zoom(
                phi, alpha1, alpha0, phi_a1, phi_a0, derphi_a1, f0, derphi0, c1, c2, maxiter
            )
            return None if alpha is None else phi.result(alpha)

        alpha0, phi_a0, derphi_a0 = alpha1, phi_a1, derphi_a1
        alpha1 = 2.0 * alpha1
    return None


def satisfies_strong_wolfe(
    f0: float,
    g0: np.ndarray,
    result: LineSearchResult,
    d: np.ndarray,
    c1: float = WOLFE_C1,
    c2: float = WOLFE_C2,
) -> bool:
    slope0 = float(g0 @ d)
    armijo = result.f <= f0 + c1 * result.alpha * slope0
    curvature = abs(float(result.g @ d)) <= -c2 * slope0
    return armijo and curvature


def two_loop_direction(
    g: np.ndarray, history: deque[tuple[np.ndarray, np.ndarray, float]]
) -> np.ndarray:
    """-H g for the L-BFGS inverse Hessian built from (s, y, 1/(y.s)) pairs"""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(history):
        a = rho * float(s @ q)
        q -= a * y
        alphas.append(a)
    if history:
        s, y, _ = history[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(history, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    reason: str
    evaluations: int
    f_history: list[float] = field(default_factory=list)


def lbfgs_minimize(
    fun_and_grad: FunGrad,
    x0: np.ndarray,
    history_size: int = 100,
    max_iter: int = 10000,
    grad_tol: float = 1e-12,
    param_tol: float = 1e-14,
    c1: float = WOLFE_C1,
    c2: float = WOLFE_C2,
    callback: Callable[[int, float, np.ndarray], None] | None = None,
) -> LbfgsResult:
    """Minimise with L-BFGS; tolerances are on max-abs norms of the gradient and the step.

    ``reason`` is one of ``grad_tol``, ``param_tol``, ``max_iter`` or
    ``line_search``. Iterates decrease f monotonically, so the returned point
    is also the best one visited.
    """
    x = np.array(x0, dtype=np.float64)
    f, g = fun_and_grad(x)
    f, g = float(f), np.asarray(g, dtype=np.float64)
    evaluations = 1
    pairs: deque[tuple[np.ndarray, np.ndarray, float]] = deque(maxlen=history_size)
    f_history = [f]

    if np.max(np.abs(g), initial=0.0) <= grad_tol:
        return LbfgsResult(x, f, g, 0, "grad_tol", evaluations, f_history)

    reason = "max_iter"
    iteration = 0
    while iteration < max_iter:
        d = two_loop_direction(g, pairs)
        if float(g @ d) >= 0:
            logger.debug("L-BFGS direction is not a descent direction; resetting history")
            pairs.clear()
            d = -g
        alpha1 = min(1.0, 1.0 / np.sum(np.abs(g))) if iteration == 0 else 1.0

        found = strong_wolfe(fun_and_grad, x, d, f, g, alpha1=alpha1, c1=c1, c2=c2)
        if found is None:
            logger.debug("strong Wolfe line search failed at iteration %d (f=%.6e)", iteration, f)
            reason = "line_search"
            break
        evaluations += found.evaluations - 1
        if not satisfies_strong_wolfe(f, g, found, d, c1, c2):
            raise LineSearchError(
                f"accepted step alpha={found.alpha:.3e} violates the strong Wolfe conditions"
            )

        s = found.alpha * d
        y = found.g - g
        sy = float(s @ y)
        if sy > 1e-10 * float(y @ y):
            pairs.append((s, y, 1.0 / sy))

        x = x + s
        f, g = found.f, found.g
        iteration += 1
        f_history.append(f)
        if callback is not None:
            callback(iteration, f, g)

        if np.max(np.abs(g)) <= grad_tol:
            reason = "grad_tol"
            break
        if np.max(np.abs(s)) <= param_tol:
            reason = "param_tol"
            break

    return LbfgsResult(x, f, g, iteration, reason, evaluations, f_history)
