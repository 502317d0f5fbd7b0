"""Exact derivatives for the surface model.

Two mechanisms are combined:

* ``Jet2`` carries value, gradient and packed Hessian of a scalar field with
  respect to the two disc coordinates (forward mode, exact to rounding).
* ``Node`` records numpy array operations on a tape so that a scalar loss can
  be differentiated with respect to the flat parameter vector in a single
  reverse sweep.

Jet2 components may be floats, numpy arrays or tape nodes. When the network
parameters are tape leaves, every Jet2 component downstream of them is a
node, so the Hessian data consumed by the residual is itself differentiated
by the reverse sweep (forward over space, reverse over parameters).

Policy: a tape is built per evaluation and consumed by ``grad_wrt_params``;
requesting the gradient twice from the same recording is an error. Any
non-finite intermediate stops the evaluation with ``NonFiniteError``.
"""

from __future__ import annotations

import operator
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import JetDomainError, NonFiniteError

Vjp = Callable[[np.ndarray], np.ndarray]


class Node:
    """A recorded array value with edges to the values it was computed from"""

    __slots__ = ("value", "op", "grad", "_edges")
    # numpy defers mixed ndarray/Node arithmetic to the reflected Node methods
    __array_ufunc__ = None

    def __init__(self, value: np.ndarray, edges: tuple[tuple[Node, Vjp], ...] = (), op="leaf"):
        self.value = value
        self.op = op
        self.grad: np.ndarray | None = None
        self._edges = edges

    @classmethod
    def leaf(cls, value: Any) -> Node:
        """Create an independent variable holding a private copy of ``value``"""
        return cls(np.array(value, dtype=np.float64))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def T(self) -> Node:
        return transpose(self)

    def __repr__(self) -> str:
        return f"Node(op={self.op!r}, shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return powi(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, index):
        return getitem(self, index)

    def reshape(self, *shape) -> Node:
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return reshape(self, shape)

    def sum(self, axis: int | None = None) -> Node:
        return sum_(self, axis)


def raw(x: Any) -> Any:
    """Strip the tape wrapper, returning the underlying value"""
    return x.value if isinstance(x, Node) else x


def check_finite(value: Any, op: str) -> Any:
    """Raise ``NonFiniteError`` locating the first NaN/Inf entry of ``value``"""
    arr = np.asarray(value)
    finite = np.isfinite(arr)
    if not np.all(finite):
        bad = np.argwhere(~finite)
        index = tuple(int(i) for i in bad[0]) if bad.size else ()
        raise NonFiniteError(op, index, float(arr[index]))
    return value


def _record(value: Any, op: str, edges: tuple[tuple[Any, Vjp], ...]) -> Node | np.ndarray:
    value = np.asarray(value, dtype=np.float64)
    check_finite(value, op)
    live = tuple((parent, vjp) for parent, vjp in edges if isinstance(parent, Node))
    if not live:
        return value
    return Node(value, live, op)


def _identity(grad: np.ndarray) -> np.ndarray:
    return grad


def add(a, b):
    return _record(raw(a) + raw(b), "add", ((a, _identity), (b, _identity)))


def sub(a, b):
    return _record(raw(a) - raw(b), "sub", ((a, _identity), (b, np.negative)))


def mul(a, b):
    ra, rb = raw(a), raw(b)
    return _record(ra * rb, "mul", ((a, lambda g: g * rb), (b, lambda g: g * ra)))


def div(a, b):
    ra, rb = raw(a), raw(b)
    if np.any(np.asarray(rb) == 0):
        raise JetDomainError("div", "division by zero")
    value = ra / rb
    return _record(value, "div", ((a, lambda g: g / rb), (b, lambda g: -g * value / rb)))


def neg(a):
    return _record(-raw(a), "neg", ((a, np.negative),))


def powi(a, exponent: int):
    """Integer power; negative exponents require a nonzero base"""
    n = operator.index(exponent)
    ra = raw(a)
    if n == 0:
        return np.ones_like(np.asarray(ra, dtype=np.float64))
    if n < 0 and np.any(np.asarray(ra) == 0):
        raise JetDomainError("powi", f"zero raised to negative power {n}")
    if n == 1:
        return a
    return _record(ra**n, "powi", ((a, lambda g: g * (n * ra ** (n - 1))),))


def exp(a):
    value = np.exp(raw(a))
    return _record(value, "exp", ((a, lambda g: g * value),))


def log(a):
    ra = raw(a)
    if np.any(np.asarray(ra) <= 0):
        raise JetDomainError("log", "argument must be positive")
    return _record(np.log(ra), "log", ((a, lambda g: g / ra),))


def sqrt(a):
    ra = raw(a)
    if np.any(np.asarray(ra) <= 0):
        raise JetDomainError("sqrt", "argument must be positive")
    value = np.sqrt(ra)
    return _record(value, "sqrt", ((a, lambda g: 0.5 * g / value),))


def tanh(a):
    value = np.tanh(raw(a))
    return _record(value, "tanh", ((a, lambda g: g * (1.0 - value * value)),))


def sin(a):
    ra = raw(a)
    return _record(np.sin(ra), "sin", ((a, lambda g: g * np.cos(ra)),))


def cos(a):
    ra = raw(a)
    return _record(np.cos(ra), "cos", ((a, lambda g: -g * np.sin(ra)),))


def matmul(a, b):
    ra, rb = raw(a), raw(b)
    return _record(
        ra @ rb,
        "matmul",
        (
            (a, lambda g: g @ np.swapaxes(rb, -1, -2)),
            (b, lambda g: np.swapaxes(ra, -1, -2) @ g),
        ),
    )


def transpose(a):
    return _record(np.transpose(raw(a)), "transpose", ((a, np.transpose),))


def reshape(a, shape: tuple[int, ...]):
    ra = raw(a)
    original = np.shape(ra)
    return _record(np.reshape(ra, shape), "reshape", ((a, lambda g: np.reshape(g, original)),))


def getitem(a, index):
    ra = np.asarray(raw(a))

    def scatter(grad: np.ndarray) -> np.ndarray:
        out = np.zeros_like(ra)
        np.add.at(out, index, grad)
        return out

    return _record(ra[index], "getitem", ((a, scatter),))


def sum_(a, axis: int | None = None):
    ra = raw(a)
    shape = np.shape(ra)

    def spread(grad: np.ndarray) -> np.ndarray:
        if axis is None:
            return np.broadcast_to(grad, shape)
        return np.broadcast_to(np.expand_dims(grad, axis), shape)

    return _record(np.sum(ra, axis=axis), "sum", ((a, spread),))


def mean(a):
    return sum_(a) / float(np.size(raw(a)))


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    grad = np.asarray(grad)
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _topological_order(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._edges:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(root: Node) -> None:
    """Accumulate d(root)/d(leaf) into ``leaf.grad`` and release the tape"""
    order = _topological_order(root)
    pending: dict[int, np.ndarray] = {id(root): np.ones_like(root.value)}
    for node in reversed(order):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if not node._edges:
            node.grad = grad if node.grad is None else node.grad + grad
            continue
        for parent, vjp in node._edges:
            contribution = _unbroadcast(vjp(grad), parent.value.shape)
            key = id(parent)
            pending[key] = contribution if key not in pending else pending[key] + contribution
        node._edges = ()


@dataclass
class RecordedScalar:
    """A scalar recorded on the tape together with the parameter leaf it depends on"""

    node: Node | np.ndarray
    params: Node
    consumed: bool = False

    @property
    def value(self) -> float:
        return float(np.asarray(raw(self.node)).reshape(()))


def grad_wrt_params(loss: RecordedScalar) -> np.ndarray:
    """Return d(loss)/d(theta) for the recorded parameter leaf, consuming the tape"""
    if loss.consumed:
        raise RuntimeError("recorded computation was already consumed by a reverse sweep")
    value = np.asarray(raw(loss.node))
    if value.size != 1:
        raise ValueError(f"loss must be a scalar, got shape {value.shape}")
    check_finite(value, "loss")
    loss.consumed = True
    if not isinstance(loss.node, Node):
        return np.zeros_like(loss.params.value)
    loss.params.grad = None
    backward(loss.node)
    if loss.params.grad is None:
        return np.zeros_like(loss.params.value)
    return np.array(loss.params.grad, dtype=np.float64)


def _is_zero(c: Any) -> bool:
    return isinstance(c, (int, float)) and c == 0


def _p(*factors):
    """Product that short-circuits on literal zeros"""
    if any(_is_zero(f) for f in factors):
        return 0.0
    result = factors[0]
    for f in factors[1:]:
        result = result * f
    return result


def _s(*terms):
    """Sum that skips literal zeros"""
    live = [t for t in terms if not _is_zero(t)]
    if not live:
        return 0.0
    result = live[0]
    for t in live[1:]:
        result = result + t
    return result


def _positive(value: Any, op: str) -> None:
    if np.any(np.asarray(raw(value)) <= 0):
        raise JetDomainError(op, "argument must be positive")


def _nonzero(value: Any, op: str) -> None:
    if np.any(np.asarray(raw(value)) == 0):
        raise JetDomainError(op, "division by zero")


@dataclass(frozen=True, slots=True, eq=False)
class Jet2:
    """Second-order Taylor data of a scalar field in the disc coordinates (x, y)"""

    value: Any
    dx: Any = 0.0
    dy: Any = 0.0
    dxx: Any = 0.0
    dxy: Any = 0.0
    dyy: Any = 0.0

    __array_ufunc__ = None

    @classmethod
    def constant(cls, value: Any) -> Jet2:
        return cls(value)

    @property
    def grad(self) -> tuple[Any, Any]:
        return (self.dx, self.dy)

    @property
    def hess(self) -> tuple[Any, Any, Any]:
        return (self.dxx, self.dxy, self.dyy)

    def components(self) -> tuple[Any, ...]:
        return (self.value, self.dx, self.dy, self.dxx, self.dxy, self.dyy)

    def map(self, fn: Callable[[Any], Any]) -> Jet2:
        """Apply a shape operation (slicing, reshaping) to every non-literal component"""
        return Jet2(*(c if isinstance(c, (int, float)) else fn(c) for c in self.components()))

    def detach(self) -> Jet2:
        """Drop tape wrappers, keeping plain values"""
        return Jet2(*(raw(c) for c in self.components()))

    def arrays(self) -> tuple[np.ndarray, ...]:
        """All six components as float arrays broadcast to the value's shape"""
        shape = np.shape(raw(self.value))
        return tuple(
            np.broadcast_to(np.asarray(raw(c), dtype=np.float64), shape)
            for c in self.components()
        )

    def _chain(self, f0, f1, f2) -> Jet2:
        return Jet2(
            f0,
            _p(f1, self.dx),
            _p(f1, self.dy),
            _s(_p(f2, self.dx, self.dx), _p(f1, self.dxx)),
            _s(_p(f2, self.dx, self.dy), _p(f1, self.dxy)),
            _s(_p(f2, self.dy, self.dy), _p(f1, self.dyy)),
        )

    def __add__(self, other) -> Jet2:
        if isinstance(other, Jet2):
            return Jet2(*(_s(a, b) for a, b in zip(self.components(), other.components())))
        return Jet2(self.value + other, self.dx, self.dy, self.dxx, self.dxy, self.dyy)

    __radd__ = __add__

    def __neg__(self) -> Jet2:
        return Jet2(*(c if _is_zero(c) else -c for c in self.components()))

    def __sub__(self, other) -> Jet2:
        if isinstance(other, Jet2):
            return self + (-other)
        return Jet2(self.value - other, self.dx, self.dy, self.dxx, self.dxy, self.dyy)

    def __rsub__(self, other) -> Jet2:
        return (-self) + other

    def __mul__(self, other) -> Jet2:
        if not isinstance(other, Jet2):
            return Jet2(*(_p(c, other) for c in self.components()))
        a, b = self, other
        return Jet2(
            a.value * b.value,
            _s(_p(a.dx, b.value), _p(a.value, b.dx)),
            _s(_p(a.dy, b.value), _p(a.value, b.dy)),
            _s(_p(a.dxx, b.value), _p(2.0, a.dx, b.dx), _p(a.value, b.dxx)),
            _s(_p(a.dxy, b.value), _p(a.dx, b.dy), _p(a.dy, b.dx), _p(a.value, b.dxy)),
            _s(_p(a.dyy, b.value), _p(2.0, a.dy, b.dy), _p(a.value, b.dyy)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> Jet2:
        if isinstance(other, Jet2):
            return self * other.reciprocal()
        _nonzero(other, "div")
        return self * (1.0 / other)

    def __rtruediv__(self, other) -> Jet2:
        return self.reciprocal() * other

    def __pow__(self, exponent: int) -> Jet2:
        return self.powi(exponent)

    def reciprocal(self) -> Jet2:
        _nonzero(self.value, "div")
        inv = 1.0 / self.value
        inv2 = inv * inv
        return self._chain(inv, -inv2, 2.0 * inv2 * inv)

    def exp(self) -> Jet2:
        e = exp(self.value)
        return self._chain(e, e, e)

    def log(self) -> Jet2:
        _positive(self.value, "log")
        inv = 1.0 / self.value
        return self._chain(log(self.value), inv, -(inv * inv))

    def sqrt(self) -> Jet2:
        _positive(self.value, "sqrt")
        s = sqrt(self.value)
        return self._chain(s, 0.5 / s, -0.25 / (s * self.value))

    def tanh(self) -> Jet2:
        t = tanh(self.value)
        d1 = 1.0 - t * t
        return self._chain(t, d1, -2.0 * t * d1)

    def sin(self) -> Jet2:
        s, c = sin(self.value), cos(self.value)
        return self._chain(s, c, -s)

    def cos(self) -> Jet2:
        s, c = sin(self.value), cos(self.value)
        return self._chain(c, -s, -c)

    def silu(self) -> Jet2:
        sig = 0.5 * (1.0 + tanh(0.5 * self.value))
        slope = sig * (1.0 - sig)
        return self._chain(
            self.value * sig,
            sig + self.value * slope,
            slope * (2.0 + self.value * (1.0 - 2.0 * sig)),
        )

    def powi(self, exponent: int) -> Jet2:
        n = operator.index(exponent)
        if n == 0:
            return Jet2(np.ones_like(np.asarray(raw(self.value), dtype=np.float64)))
        if n == 1:
            return self
        if n < 0:
            _nonzero(self.value, "powi")
        v = self.value
        return self._chain(v**n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2))


def jet_input(axis: str, value: Any) -> Jet2:
    """Seed jet of a disc coordinate: gradient is the standard basis vector"""
    v = np.asarray(value, dtype=np.float64)
    if axis == "x":
        return Jet2(v, np.ones_like(v), 0.0)
    if axis == "y":
        return Jet2(v, 0.0, np.ones_like(v))
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
