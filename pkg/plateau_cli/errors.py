"""Exception hierarchy for plateau-cli"""

from __future__ import annotations

from typing import Any


class PlateauError(Exception):
    """Base class for every error raised by the library"""


class JetDomainError(PlateauError, ArithmeticError):
    """An elementary function was applied outside its domain"""

    def __init__(self, op: str, detail: str):
        self.op = op
        super().__init__(f"{op}: {detail}")


class NonFiniteError(PlateauError, FloatingPointError):
    """A recorded or evaluated intermediate became NaN or infinite"""

    def __init__(self, op: str, index: tuple[int, ...] | None = None, value: float | None = None):
        self.op = op
        self.index = index
        self.value = value
        where = f" at index {index}" if index is not None else ""
        super().__init__(f"non-finite value {value!r} produced by '{op}'{where}")


class DegenerateImmersionError(PlateauError):
    """The pulled-back metric is singular, i.e. the map is not an immersion"""

    def __init__(self, points: Any, det_floor: float):
        self.points = points
        self.det_floor = det_floor
        count = len(points) if hasattr(points, "__len__") else 1
        super().__init__(
            f"degenerate immersion point(s): det g <= {det_floor:g} at {count} point(s), "
            f"first {_first_point(points)}"
        )


class CurveError(PlateauError, ValueError):
    """Invalid boundary curve or curve construction parameters"""


class ModelConfigError(PlateauError, ValueError):
    """Incompatible surface model configuration or parameter vector"""


class TrainingAborted(PlateauError):
    """Training stopped early; the partial report is attached"""

    def __init__(self, message: str, report: Any = None):
        self.report = report
        super().__init__(message)


class LineSearchError(PlateauError):
    """An accepted line-search step violated the strong Wolfe conditions"""


class CandidateOverflowError(PlateauError):
    """Too many double-point candidates for the requested image threshold"""

    def __init__(self, count: int, cap: int, tau_img: float):
        self.count = count
        self.cap = cap
        super().__init__(
            f"{count} double-point candidates exceed the cap of {cap}; "
            f"try a smaller tau_img than {tau_img:g}"
        )


class NonTransverseError(PlateauError):
    """A refined double point is not transverse to working precision"""


class UnknownKnotError(PlateauError, KeyError):
    """The knot name is not present in the invariants tables"""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown knot"


class ConfigError(PlateauError, ValueError):
    """Invalid or incomplete experiment configuration"""


class CheckpointError(PlateauError):
    """Unreadable, malformed or incompatible checkpoint"""


def _first_point(points: Any) -> str:
    try:
        first = points[0]
        return "(" + ", ".join(f"{float(c):.6g}" for c in first) + ")"
    except (TypeError, IndexError):
        return repr(points)
