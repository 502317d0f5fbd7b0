"""HOMFLY polynomials of the tested knots and disc predictions from them.

A polynomial is stored by its coefficients c[g, d] in

    P(K) = sum c[g, d] z^(2g) a^(2(g + d))

so the g = 0 slice reads off directly as "an immersed disc with
self-intersection number d is predicted when c[0, d] != 0".
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Any

import sympy

from .errors import PlateauError, UnknownKnotError

a, z = sympy.symbols("a z")

CONSISTENT = "CONSISTENT"
NOT_PREDICTED = "NOT PREDICTED"
INDETERMINATE = "INDETERMINATE"

_SUPERSCRIPTS = str.maketrans("0123456789-", "⁰¹²³⁴⁵⁶⁷⁸⁹⁻")
MINUS = "−"


@dataclass(frozen=True)
class HomflyPolynomial:
    """Nonzero integer coefficients keyed by (g, d)"""

    terms: tuple[tuple[tuple[int, int], int], ...]

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, int], int]) -> HomflyPolynomial:
        for (g, _), c in terms.items():
            if g < 0:
                raise PlateauError(f"genus index must be non-negative, got {g}")
            if int(c) != c:
                raise PlateauError(f"HOMFLY coefficients are integers, got {c!r}")
        return cls(tuple(sorted((k, int(c)) for k, c in terms.items() if c != 0)))

    @classmethod
    def from_monomials(cls, monomials: Iterable[tuple[int, int, int]]) -> HomflyPolynomial:
        """From (coefficient, a exponent, z exponent) triples; exponents must be even"""
        terms: dict[tuple[int, int], int] = {}
        for coef, a_exp, z_exp in monomials:
            if a_exp % 2 or z_exp % 2 or z_exp < 0:
                raise PlateauError(f"not a knot HOMFLY monomial: a^{a_exp} z^{z_exp}")
            g = z_exp // 2
            key = (g, a_exp // 2 - g)
            terms[key] = terms.get(key, 0) + coef
        return cls.from_terms(terms)

    @classmethod
    def from_sympy(cls, expr: Any) -> HomflyPolynomial:
        expanded = sympy.expand(sympy.sympify(expr))
        monomials = []
        for term in sympy.Add.make_args(expanded):
            coef, rest = term.as_coeff_Mul()
            powers = rest.as_powers_dict()
            extra = set(powers) - {a, z, sympy.S.One}
            if extra or not coef.is_integer:
                raise PlateauError(f"not an integer polynomial in a, z: {term}")
            monomials.append((int(coef), int(powers.get(a, 0)), int(powers.get(z, 0))))
        return cls.from_monomials(monomials)

    def as_dict(self) -> dict[tuple[int, int], int]:
        return dict(self.terms)

    def coefficient(self, g: int, d: int) -> int:
        return self.as_dict().get((g, d), 0)

    def monomials(self) -> list[tuple[int, int, int]]:
        """(coefficient, a exponent, z exponent), ordered by z then a exponent"""
        out = [(c, 2 * (g + d), 2 * g) for (g, d), c in self.terms]
        return sorted(out, key=lambda m: (m[2], m[1]))

    def to_sympy(self) -> Any:
        return sympy.Add(*(c * a**ae * z**ze for c, ae, ze in self.monomials()))

    def disc_predictions(self) -> dict[int, int]:
        return {d: c for (g, d), c in self.terms if g == 0}

    def mirror(self) -> HomflyPolynomial:
        return self.from_terms({(g, -d - 2 * g): c for (g, d), c in self.terms})

    def render(self) -> str:
        return render_monomials(self.monomials())

    def __str__(self) -> str:
        return self.render()


def _power(symbol: str, exp: int) -> str:
    if exp == 0:
        return ""
    if exp == 1:
        return symbol
    return symbol + str(exp).translate(_SUPERSCRIPTS)


def render_monomial(coef: int, a_exp: int, z_exp: int) -> str:
    body = _power("a", a_exp) + _power("z", z_exp)
    magnitude = "" if abs(coef) == 1 and body else str(abs(coef))
    return (MINUS if coef < 0 else "") + magnitude + body


def render_monomials(monomials: Iterable[tuple[int, int, int]]) -> str:
    """Render as e.g. ``2a² − a⁴ + a²z²``"""
    parts: list[str] = []
    for coef, a_exp, z_exp in monomials:
        text = render_monomial(abs(coef), a_exp, z_exp)
        if not parts:
            parts.append(text if coef > 0 else MINUS + text)
        else:
            parts.append(("+ " if coef > 0 else MINUS + " ") + text)
    return " ".join(parts) if parts else "0"


def mirror_poly(p: HomflyPolynomial) -> HomflyPolynomial:
    """P(K*)(a, z) = P(K)(1/a, z)"""
    return p.mirror()


def disc_predictions(p: HomflyPolynomial) -> dict[int, int]:
    return p.disc_predictions()


# fmt: off
_BASE_MONOMIALS: dict[str, list[tuple[int, int, int]]] = {
    "unknot": [(1, 0, 0)],
    "3_1": [(2, 2, 0), (-1, 4, 0), (1, 2, 2)],
    "4_1": [(1, -2, 0), (-1, 0, 0), (1, 2, 0), (-1, 0, 2)],
    "5_1": [(3, 4, 0), (-2, 6, 0), (4, 4, 2), (-1, 6, 2), (1, 4, 4)],
    "5_2": [(1, 2, 0), (1, 4, 0), (-1, 6, 0), (1, 2, 2), (1, 4, 2)],
    "6_1": [(1, -2, 0), (-1, 2, 0), (1, 4, 0), (-1, 0, 2), (-1, 2, 2)],
    "8_19": [
        (5, 6, 0), (-5, 8, 0), (1, 10, 0),
        (10, 6, 2), (-5, 8, 2),
        (6, 6, 4), (-1, 8, 4),
        (1, 6, 6),
    ],
    "10_124": [
        (7, 8, 0), (-8, 10, 0), (2, 12, 0),
        (21, 8, 2), (-14, 10, 2), (1, 12, 2),
        (21, 8, 4), (-7, 10, 4),
        (8, 8, 6), (-1, 10, 6),
        (1, 8, 8),
    ],
    "square": [
        (-2, -2, 0), (5, 0, 0), (-2, 2, 0),
        (-1, -2, 2), (4, 0, 2), (-1, 2, 2),
        (1, 0, 4),
    ],
}
# fmt: on

CHIRAL = ("3_1", "5_1", "5_2", "6_1", "8_19", "10_124")
ACHIRAL = ("unknot", "4_1", "square")

KNOT_ALIASES = {"3_1#3_1*": "square", "3_1*#3_1": "square"}


def _build_table() -> dict[str, HomflyPolynomial]:
    table = {name: HomflyPolynomial.from_monomials(m) for name, m in _BASE_MONOMIALS.items()}
    for name in CHIRAL:
        table[name + "*"] = table[name].mirror()
    for name in ACHIRAL:
        table[name + "*"] = table[name]
    return table


HOMFLY_TABLE = _build_table()


def canonical_knot_name(name: str) -> str:
    key = name.strip()
    return KNOT_ALIASES.get(key, key)


def homfly_table(name: str) -> HomflyPolynomial:
    key = canonical_knot_name(name)
    try:
        return HOMFLY_TABLE[key]
    except KeyError:
        raise UnknownKnotError(
            f"no HOMFLY polynomial stored for {name!r}; known: {', '.join(known_knots())}"
        ) from None


def known_knots() -> list[str]:
    return sorted(HOMFLY_TABLE)


@dataclass(frozen=True)
class ConsistencyReport:
    knot: str
    d: int | None
    verdict: str
    coefficient: int
    term: str
    predictions: dict[int, int]

    def text(self) -> str:
        if self.verdict == CONSISTENT:
            return f"{CONSISTENT} ({self.term})"
        if self.verdict == NOT_PREDICTED:
            return f"{NOT_PREDICTED} (c[0, {self.d}] = 0)"
        return f"{INDETERMINATE} (unresolved multiplicity)"


def consistency_check(
    d_computed: int | None, p: HomflyPolynomial, knot: str = ""
) -> ConsistencyReport:
    """Does the g = 0 slice of ``p`` predict a disc with self-intersection ``d_computed``?

    ``None`` stands for a count that could not be resolved (clustered double
    points) and yields INDETERMINATE.
    """
    predictions = p.disc_predictions()
    if d_computed is None:
        return ConsistencyReport(knot, None, INDETERMINATE, 0, "", predictions)
    c = predictions.get(d_computed, 0)
    if c == 0:
        return ConsistencyReport(knot, d_computed, NOT_PREDICTED, 0, "", predictions)
    return ConsistencyReport(
        knot, d_computed, CONSISTENT, c, render_monomial(c, 2 * d_computed, 0), predictions
    )


@dataclass(frozen=True)
class ReferenceResult:
    """One row of the published summary of trained discs"""

    label: str
    knot: str
    genus: int
    crossings: int
    term: str
    self_intersection: int | None
    mc: str

    @property
    def self_intersection_text(self) -> str:
        return "triple point" if self.self_intersection is None else str(self.self_intersection)


REFERENCE_RESULTS: tuple[ReferenceResult, ...] = (
    ReferenceResult("unknot", "unknot", 0, 0, "1", 0, "4.41e-07 ± 6.16e-09 (4.61e-07)"),
    ReferenceResult("3_1", "3_1", 1, 3, "2a²", 1, "4.83e-06 ± 5.81e-08 (5.01e-06)"),
    ReferenceResult("5_1", "5_1", 2, 5, "3a⁴", 2, "6.76e-06 ± 7.39e-08 (7.00e-06)"),
    ReferenceResult("8_19", "8_19", 3, 8, "5a⁶", 3, "1.95e-05 ± 2.69e-07 (2.05e-05)"),
    ReferenceResult(
        "unperturbed 8_19", "8_19", 3, 8, "5a⁶", None, "6.12e-05 ± 7.39e-07 (6.36e-05)"
    ),
    ReferenceResult("10_124", "10_124", 4, 10, "7a⁸", 4, "5.01e-04 ± 4.60e-06 (5.17e-04)"),
    ReferenceResult("4_1", "4_1", 1, 4, "a²", 1, "5.14e-06 ± 5.87e-08 (5.33e-06)"),
    ReferenceResult("4_1*", "4_1*", 1, 4, "a⁻²", -1, "2.47e-06 ± 3.06e-08 (2.58e-06)"),
    ReferenceResult("5_2", "5_2", 1, 5, "−a⁶", 3, "1.53e-05 ± 9.34e-07 (1.98e-05)"),
    ReferenceResult("5_2*", "5_2*", 1, 5, "−a⁻⁶", -3, "4.97e-05 ± 1.99e-06 (5.66e-05)"),
    ReferenceResult("6_1", "6_1", 0, 6, "−a²", 1, "4.62e-06 ± 8.47e-08 (4.87e-06)"),
    ReferenceResult("6_1*", "6_1*", 0, 6, "−a⁻²", -1, "8.52e-05 ± 1.75e-06 (9.12e-05)"),
    ReferenceResult("3_1#3_1*", "square", 0, 6, "5", 0, "2.32e-05 ± 7.60e-07 (2.59e-05)"),
)


def reference_for(knot: str, perturbed: bool = True) -> ReferenceResult | None:
    """The published row for ``knot``; the unperturbed 8_19 run has its own row"""
    key = canonical_knot_name(knot)
    rows = [r for r in REFERENCE_RESULTS if r.knot == key]
    unperturbed = [r for r in rows if r.label.startswith("unperturbed")]
    if not perturbed and unperturbed:
        return unperturbed[0]
    plain = [r for r in rows if r not in unperturbed]
    return plain[0] if plain else None
