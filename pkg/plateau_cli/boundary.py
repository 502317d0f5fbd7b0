"""Boundary curves, boundary defining functions and extension operators.

A closed curve gamma: S^1 -> R^n is stored as a truncated complex Fourier
series per component, ``coeffs[k, N + m] = c_m`` for m = -N..N. Every preset
is band-limited, so the stored series is exact and the extensions below are
built mode by mode in closed form.
"""

from __future__ import annotations

import io
import re
from collections.abc import Iterable
from dataclasses import dataclass
from math import gcd
from pathlib import Path

import numpy as np

from .autodiff import Jet2
from .errors import CurveError

EXTENSION_KINDS = ("stereographic", "stereoharmonic", "stereobiharmonic")
RHO_KINDS = ("stereographic", "one_minus_r2")

SYMMETRY_ATOL = 1e-12
INJECTIVITY_SAMPLES = 512
INJECTIVITY_WINDOW = 8
INJECTIVITY_RTOL = 1e-8
# r^2 floor for the stereographic extension at the disc centre
ORIGIN_R2_FLOOR = 1e-24

TORUS_LABELS = {(2, 3): "3_1", (2, 5): "5_1", (3, 4): "8_19", (3, 5): "10_124"}


@dataclass(frozen=True, eq=False)
class KnotCurve:
    """A closed curve S^1 -> R^n as a truncated Fourier series"""

    coeffs: np.ndarray
    label: str = "curve"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 2 or c.shape[1] % 2 != 1:
            raise CurveError(f"coefficients must have shape (n, 2N+1), got {c.shape}")
        if c.shape[0] < 2:
            raise CurveError(f"ambient dimension must be at least 2, got {c.shape[0]}")
        if not np.all(np.isfinite(c)):
            raise CurveError("coefficients must be finite")
        mirrored = np.conj(c[:, ::-1])
        if not np.allclose(c, mirrored, rtol=0.0, atol=SYMMETRY_ATOL):
            raise CurveError("coefficients are not conjugate-symmetric (curve is not real)")
        c = 0.5 * (c + mirrored)
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def ambient_dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_modes(self) -> int:
        """N, the largest stored mode"""
        return self.coeffs.shape[1] // 2

    @property
    def max_mode(self) -> int:
        """Largest mode with a nonzero coefficient"""
        nonzero = np.nonzero(np.any(self.coeffs != 0, axis=0))[0]
        if nonzero.size == 0:
            return 0
        return int(np.max(np.abs(nonzero - self.n_modes)))

    def coefficient(self, component: int, m: int) -> complex:
        if abs(m) > self.n_modes:
            return 0j
        return complex(self.coeffs[component, self.n_modes + m])

    def padded(self, n_modes: int) -> np.ndarray:
        """Coefficient array zero-padded (or trimmed of zero modes) to N = ``n_modes``"""
        if n_modes < self.max_mode:
            raise CurveError(f"cannot truncate to {n_modes} modes; curve uses mode {self.max_mode}")
        out = np.zeros((self.ambient_dim, 2 * n_modes + 1), dtype=np.complex128)
        keep = min(n_modes, self.n_modes)
        out[:, n_modes - keep : n_modes + keep + 1] = self.coeffs[
            :, self.n_modes - keep : self.n_modes + keep + 1
        ]
        return out

    def _real_series(self, theta, derivative: bool) -> np.ndarray:
        theta = np.mod(np.asarray(theta, dtype=np.float64), 2.0 * np.pi)
        out = np.zeros(theta.shape + (self.ambient_dim,))
        if not derivative:
            out += self.coeffs[:, self.n_modes].real
        for m in range(1, self.n_modes + 1):
            c = self.coeffs[:, self.n_modes + m]
            cos_m = np.expand_dims(np.cos(m * theta), -1)
            sin_m = np.expand_dims(np.sin(m * theta), -1)
            if derivative:
                out += 2.0 * m * (-c.real * sin_m - c.imag * cos_m)
            else:
                out += 2.0 * (c.real * cos_m - c.imag * sin_m)
        return out

    def evaluate(self, theta) -> np.ndarray:
        """gamma(theta), shape ``theta.shape + (n,)``"""
        return self._real_series(theta, derivative=False)

    def derivative(self, theta) -> np.ndarray:
        """d gamma / d theta, shape ``theta.shape + (n,)``"""
        return self._real_series(theta, derivative=True)

    def scale(self) -> float:
        theta = np.linspace(0.0, 2.0 * np.pi, INJECTIVITY_SAMPLES, endpoint=False)
        return float(np.max(np.linalg.norm(self.evaluate(theta), axis=-1)))

    def min_separation(
        self, samples: int = INJECTIVITY_SAMPLES, window: int = INJECTIVITY_WINDOW
    ) -> float:
        """Smallest distance between samples more than ``window`` steps apart (circularly)"""
        theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        pts = self.evaluate(theta)
        sq = np.sum(pts * pts, axis=1)
        dist2 = sq[:, None] + sq[None, :] - 2.0 * pts @ pts.T
        idx = np.arange(samples)
        gap = np.abs(idx[:, None] - idx[None, :])
        gap = np.minimum(gap, samples - gap)
        dist2 = np.where(gap > window, dist2, np.inf)
        return float(np.sqrt(max(float(np.min(dist2)), 0.0)))

    def is_injective(self) -> bool:
        return self.min_separation() > INJECTIVITY_RTOL * max(self.scale(), 1.0)

    def to_table(self) -> str:
        """Plain-text coefficient table: one row per mode, m then Re/Im per component"""
        n = self.ambient_dim
        modes = np.arange(-self.n_modes, self.n_modes + 1)
        data = np.empty((modes.size, 1 + 2 * n))
        data[:, 0] = modes
        data[:, 1::2] = self.coeffs.real.T
        data[:, 2::2] = self.coeffs.imag.T
        columns = " ".join(f"re_{k + 1} im_{k + 1}" for k in range(n))
        buffer = io.StringIO()
        np.savetxt(
            buffer,
            data,
            fmt=["%d"] + ["%.17g"] * (2 * n),
            header=f"knot: {self.label}\nambient_dim: {n}\nm {columns}",
        )
        return buffer.getvalue()

    @classmethod
    def from_table(cls, text: str, label: str | None = None) -> KnotCurve:
        found = re.search(r"^#\s*knot:\s*(\S+)", text, flags=re.MULTILINE)
        try:
            data = np.loadtxt(io.StringIO(text), comments="#", ndmin=2)
        except ValueError as e:
            raise CurveError(f"malformed coefficient table: {e}") from e
        if data.shape[1] < 5 or data.shape[1] % 2 != 1:
            raise CurveError(f"coefficient table has {data.shape[1]} columns")
        modes = data[:, 0].astype(int)
        n_modes = int(np.max(np.abs(modes)))
        if data.shape[0] != 2 * n_modes + 1 or not np.array_equal(
            np.sort(modes), np.arange(-n_modes, n_modes + 1)
        ):
            raise CurveError("coefficient table must list every mode from -N to N once")
        order = np.argsort(modes)
        coeffs = (data[order, 1::2] + 1j * data[order, 2::2]).T
        name = label or (found.group(1) if found else "curve")
        return cls(coeffs, name)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_table(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> KnotCurve:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise CurveError(f"cannot read curve table {path}: {e}") from e
        return cls.from_table(text)


def _add_harmonic(coeffs: np.ndarray, component: int, m: int, cos_amp: float, sin_amp: float):
    """Add cos_amp*cos(m t) + sin_amp*sin(m t) to one component in place"""
    n_modes = coeffs.shape[1] // 2
    if m < 0:
        m, sin_amp = -m, -sin_amp
    if m == 0:
        coeffs[component, n_modes] += cos_amp
        return
    coeffs[component, n_modes + m] += 0.5 * (cos_amp - 1j * sin_amp)
    coeffs[component, n_modes - m] += 0.5 * (cos_amp + 1j * sin_amp)


def curve_from_terms(
    ambient_dim: int, terms: Iterable[tuple[int, int, float, float]], label: str
) -> KnotCurve:
    """Build a curve from ``(component, m, cos_amp, sin_amp)`` terms"""
    terms = list(terms)
    n_modes = max((abs(m) for _, m, _, _ in terms), default=0)
    coeffs = np.zeros((ambient_dim, 2 * n_modes + 1), dtype=np.complex128)
    for component, m, cos_amp, sin_amp in terms:
        _add_harmonic(coeffs, component, m, cos_amp, sin_amp)
    return KnotCurve(coeffs, label)


def _phased_cos(component: int, m: int, phase: float, amp: float = 1.0):
    # amp*cos(m t + phase) = amp*cos(phase) cos(m t) - amp*sin(phase) sin(m t)
    return (component, m, amp * np.cos(phase), -amp * np.sin(phase))


def torus_label(p: int, q: int) -> str:
    pair = tuple(sorted((abs(p), abs(q))))
    if pair[0] == 1:
        return "unknot"
    label = TORUS_LABELS.get(pair, f"T({abs(p)},{abs(q)})")
    return label + "*" if p * q < 0 else label


def torus_knot(p: int, q: int, R: float = 2.0, r: float = 0.5) -> KnotCurve:
    """The (p, q) torus knot ((R + r cos qt) cos pt, (R + r cos qt) sin pt, r sin qt)"""
    if p == 0 or q == 0:
        raise CurveError(f"torus knot needs nonzero p and q, got ({p}, {q})")
    if gcd(p, q) != 1:
        raise CurveError(f"gcd({p}, {q}) = {gcd(p, q)}: a torus knot needs coprime p and q")
    if not R > r > 0:
        raise CurveError(f"torus radii must satisfy R > r > 0, got R={R}, r={r}")
    half = 0.5 * r
    terms = [
        (0, p, R, 0.0),
        (0, p + q, half, 0.0),
        (0, p - q, half, 0.0),
        (1, p, 0.0, R),
        (1, p + q, 0.0, half),
        (1, p - q, 0.0, half),
        (2, q, 0.0, r),
    ]
    return curve_from_terms(3, terms, torus_label(p, q))


def lissajous(
    freqs: tuple[int, ...], phases: tuple[float, ...], label: str, sign: float = 1.0
) -> KnotCurve:
    """Component k is sign*cos(freqs[k] t + phases[k])"""
    terms = [_phased_cos(k, f, ph, sign) for k, (f, ph) in enumerate(zip(freqs, phases))]
    return curve_from_terms(len(freqs), terms, label)


def _unknot() -> KnotCurve:
    return curve_from_terms(3, [(0, 1, 1.0, 0.0), (1, 1, 0.0, 1.0)], "unknot")


def _figure8() -> KnotCurve:
    # (1 + cos(2t)/2) (cos 3t, sin 3t) expanded into single harmonics
    return curve_from_terms(
        3,
        [
            (0, 3, 1.0, 0.0),
            (0, 5, 0.25, 0.0),
            (0, 1, 0.25, 0.0),
            (1, 3, 0.0, 1.0),
            (1, 5, 0.0, 0.25),
            (1, 1, 0.0, 0.25),
            (2, 4, 0.0, 0.5),
        ],
        "4_1",
    )


def _circle2d() -> KnotCurve:
    return curve_from_terms(2, [(0, 1, 1.0, 0.0), (1, 1, 0.0, 1.0)], "unknot")


def _ellipse() -> KnotCurve:
    return curve_from_terms(2, [(0, 1, 1.0, 0.0), (1, 1, 0.0, 0.6)], "unknot")


def _flower() -> KnotCurve:
    # polar graph r(t) = 1 + 0.2 cos 3t
    return curve_from_terms(
        2,
        [
            (0, 1, 1.0, 0.0),
            (0, 4, 0.1, 0.0),
            (0, 2, 0.1, 0.0),
            (1, 1, 0.0, 1.0),
            (1, 4, 0.0, 0.1),
            (1, 2, 0.0, -0.1),
        ],
        "unknot",
    )


PRESETS = {
    "unknot": _unknot,
    "figure8": _figure8,
    "three_twist": lambda: lissajous((3, 2, 7), (0.7, 0.2, 0.0), "5_2", sign=-1.0),
    "stevedore": lambda: lissajous((3, 2, 5), (1.5, 0.2, 0.0), "6_1", sign=-1.0),
    "square": lambda: lissajous((3, 5, 7), (0.7, 1.0, 0.0), "square"),
    "trefoil": lambda: torus_knot(3, 2),
    "cinquefoil": lambda: torus_knot(5, 2),
    "t43": lambda: torus_knot(4, 3),
    "t53": lambda: torus_knot(5, 3),
    "circle2d": _circle2d,
    "ellipse": _ellipse,
    "flower": _flower,
}


def preset_curve(name: str) -> KnotCurve:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise CurveError(f"unknown curve preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory()


def mirror_label(label: str) -> str:
    if label in ("unknot", "curve"):
        return label
    return label[:-1] if label.endswith("*") else label + "*"


def mirror_curve(curve: KnotCurve) -> KnotCurve:
    """Reflect z -> -z"""
    if curve.ambient_dim != 3:
        raise CurveError(f"mirror needs a curve in R^3, got ambient_dim={curve.ambient_dim}")
    coeffs = curve.coeffs.copy()
    coeffs[2] = -coeffs[2]
    return KnotCurve(coeffs, mirror_label(curve.label))


def perturb(curve: KnotCurve, sigma: float, K: int, seed: int) -> KnotCurve:
    """Add sigma * sum_{m<=K} (A_m cos mt + B_m sin mt), entries of A_m, B_m uniform in [0, 1]"""
    if sigma < 0:
        raise CurveError(f"sigma must be non-negative, got {sigma}")
    if K < 1:
        raise CurveError(f"K must be at least 1, got {K}")
    if sigma == 0:
        return curve

    n = curve.ambient_dim
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.0, 1.0, size=(K, n))
    B = rng.uniform(0.0, 1.0, size=(K, n))
    n_modes = max(curve.max_mode, K)
    coeffs = curve.padded(n_modes)
    for m in range(1, K + 1):
        for k in range(n):
            _add_harmonic(coeffs, k, m, sigma * A[m - 1, k], sigma * B[m - 1, k])

    perturbed = KnotCurve(coeffs, curve.label)
    if not perturbed.is_injective():
        raise CurveError(
            f"perturbed curve fails the injectivity check (min separation "
            f"{perturbed.min_separation():.3g}); try a smaller sigma than {sigma:g}"
        )
    return perturbed


@dataclass(frozen=True, eq=False)
class ExtensionField:
    """Radial profiles a_m r^|m| + b_m r^(|m|+2) per mode and component.

    For the stereographic kind ``a`` holds the curve coefficients and the
    field is r*gamma(theta); ``b`` is zero for the harmonic kinds.
    """

    kind: str
    a: np.ndarray
    b: np.ndarray

    @property
    def ambient_dim(self) -> int:
        return self.a.shape[0]

    @property
    def n_modes(self) -> int:
        return self.a.shape[1] // 2

    def mode(self, component: int, m: int) -> tuple[complex, complex]:
        j = self.n_modes + m
        return complex(self.a[component, j]), complex(self.b[component, j])


def build_extension(curve: KnotCurve, kind: str, N: int | None = None) -> ExtensionField:
    if kind not in EXTENSION_KINDS:
        raise CurveError(f"unknown extension kind {kind!r}; choose from {EXTENSION_KINDS}")
    n_modes = curve.max_mode if N is None else N
    if n_modes < curve.max_mode:
        raise CurveError(f"N={n_modes} is below the curve's highest mode {curve.max_mode}")

    c = curve.padded(n_modes)
    if kind == "stereobiharmonic":
        m = np.abs(np.arange(-n_modes, n_modes + 1))
        # a + b = c (Dirichlet) and |m| a + (|m| + 2) b = c (Neumann)
        b = c * (1.0 - m) / 2.0
        a = c - b
    else:
        a, b = c, np.zeros_like(c)
    for arr in (a, b):
        arr.flags.writeable = False
    return ExtensionField(kind, a, b)


def _zm_jets(x: Jet2, y: Jet2, n_modes: int) -> list[tuple[Jet2, Jet2]]:
    """(Re, Im) of (x + iy)^m for m = 0..n_modes"""
    one = Jet2(np.ones(np.shape(x.value)))
    zero = Jet2(np.zeros(np.shape(x.value)))
    powers = [(one, zero)]
    if n_modes >= 1:
        powers.append((x, y))
    for _ in range(2, n_modes + 1):
        P, Q = powers[-1]
        powers.append((P * x - Q * y, P * y + Q * x))
    return powers


def _harmonic_sum(coeffs: np.ndarray, powers: list[tuple[Jet2, Jet2]], shape) -> Jet2:
    # Re c_0 + sum_m 2 (Re c_m P_m - Im c_m Q_m)
    n_modes = coeffs.size // 2
    total = Jet2(np.full(shape, float(coeffs[n_modes].real)))
    for m in range(1, n_modes + 1):
        c = coeffs[n_modes + m]
        if c == 0:
            continue
        P, Q = powers[m]
        total = total + P * float(2.0 * c.real) - Q * float(2.0 * c.imag)
    return total


def r_squared(x: Jet2, y: Jet2) -> Jet2:
    return x * x + y * y


def eval_extension(ext: ExtensionField, x: Jet2, y: Jet2) -> list[Jet2]:
    """Jets of 2*Gamma/(1 + r^2), one per ambient component"""
    shape = np.shape(x.value)
    r2 = r_squared(x, y)
    factor = 2.0 / (1.0 + r2)

    if ext.kind == "stereographic":
        floored = Jet2(np.maximum(r2.value, ORIGIN_R2_FLOOR), *r2.components()[1:])
        r = floored.sqrt()
        powers = _zm_jets(x / r, y / r, ext.n_modes)
        return [
            factor * (r * _harmonic_sum(ext.a[k], powers, shape))
            for k in range(ext.ambient_dim)
        ]

    powers = _zm_jets(x, y, ext.n_modes)
    fields = []
    for k in range(ext.ambient_dim):
        gamma = _harmonic_sum(ext.a[k], powers, shape)
        if np.any(ext.b[k] != 0):
            gamma = gamma + r2 * _harmonic_sum(ext.b[k], powers, shape)
        fields.append(factor * gamma)
    return fields


def rho_st(x: Jet2, y: Jet2) -> Jet2:
    """Stereographic boundary defining function (1 - r^2)/(1 + r^2)"""
    r2 = r_squared(x, y)
    return (1.0 - r2) / (1.0 + r2)


def rho_one_minus_r2(x: Jet2, y: Jet2) -> Jet2:
    return 1.0 - r_squared(x, y)


RHO_FUNCTIONS = {"stereographic": rho_st, "one_minus_r2": rho_one_minus_r2}


def rho(kind: str, x: Jet2, y: Jet2) -> Jet2:
    try:
        fn = RHO_FUNCTIONS[kind]
    except KeyError:
        raise CurveError(
            f"unknown boundary defining function {kind!r}; choose from {RHO_KINDS}"
        ) from None
    return fn(x, y)
