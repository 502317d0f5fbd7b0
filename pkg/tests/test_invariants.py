"""Tests for plateau_cli.invariants module"""

import pytest
import sympy

from plateau_cli.errors import PlateauError, UnknownKnotError
from plateau_cli.invariants import (
    CONSISTENT,
    INDETERMINATE,
    NOT_PREDICTED,
    REFERENCE_RESULTS,
    HomflyPolynomial,
    a,
    consistency_check,
    disc_predictions,
    homfly_table,
    known_knots,
    mirror_poly,
    reference_for,
    render_monomials,
    z,
)

TREFOIL = HomflyPolynomial.from_monomials([(2, 2, 0), (-1, 4, 0), (1, 2, 2)])


class TestHomflyPolynomial:
    """Tests for HomflyPolynomial"""

    def test_coefficients_by_genus_and_degree(self):
        assert TREFOIL.coefficient(0, 1) == 2
        assert TREFOIL.coefficient(0, 2) == -1
        assert TREFOIL.coefficient(1, 0) == 1
        assert TREFOIL.coefficient(0, 0) == 0
        assert TREFOIL.disc_predictions() == {1: 2, 2: -1}

    def test_render(self):
        assert TREFOIL.render() == "2a² − a⁴ + a²z²"
        assert str(homfly_table("unknot")) == "1"
        assert render_monomials([]) == "0"
        assert render_monomials([(-1, -2, 0)]) == "−a⁻²"

    def test_sympy_round_trip(self):
        expr = 2 * a**2 - a**4 + a**2 * z**2
        assert HomflyPolynomial.from_sympy(expr) == TREFOIL
        assert sympy.expand(TREFOIL.to_sympy() - expr) == 0

    def test_mirror_substitutes_inverse_a(self):
        mirrored = mirror_poly(TREFOIL)
        expected = TREFOIL.to_sympy().subs(a, 1 / a)
        assert sympy.simplify(mirrored.to_sympy() - expected) == 0
        assert mirrored.mirror() == TREFOIL
        assert disc_predictions(mirrored) == {-1: 2, -2: -1}

    def test_cancelling_terms_are_dropped(self):
        p = HomflyPolynomial.from_monomials([(1, 2, 0), (-1, 2, 0), (3, 0, 0)])
        assert p.terms == (((0, 0), 3),)

    @pytest.mark.parametrize("monomials", [[(1, 1, 0)], [(1, 2, 1)], [(1, 2, -2)]])
    def test_odd_exponents_rejected(self, monomials):
        with pytest.raises(PlateauError):
            HomflyPolynomial.from_monomials(monomials)

    def test_non_polynomial_rejected(self):
        with pytest.raises(PlateauError):
            HomflyPolynomial.from_sympy(a**2 / 2)
        with pytest.raises(PlateauError):
            HomflyPolynomial.from_terms({(-1, 0): 1})


class TestHomflyTable:
    """The stored polynomials satisfy the standard identities"""

    @pytest.mark.parametrize("name", known_knots())
    def test_normalisation(self, name):
        """P(a = 1, z = 0) = 1 for every knot"""
        assert homfly_table(name).to_sympy().subs({a: 1, z: 0}) == 1

    @pytest.mark.parametrize("name", known_knots())
    def test_jones_specialisation_is_laurent_in_t(self, name):
        """a = t⁻¹, z = t^½ − t^-½ yields a Laurent polynomial in t"""
        t = sympy.symbols("t", positive=True)
        jones = homfly_table(name).to_sympy().subs({a: 1 / t, z: sympy.sqrt(t) - 1 / sympy.sqrt(t)})
        assert sympy.expand(jones * t**20).is_polynomial(t)

    def test_trefoil_jones(self):
        t = sympy.symbols("t", positive=True)
        jones = homfly_table("3_1").to_sympy().subs({a: 1 / t, z: sympy.sqrt(t) - 1 / sympy.sqrt(t)})
        assert sympy.expand(jones - (-(t**-4) + t**-3 + t**-1)) == 0

    def test_square_knot_is_product(self):
        product = sympy.expand(homfly_table("3_1").to_sympy() * homfly_table("3_1*").to_sympy())
        assert sympy.expand(product - homfly_table("square").to_sympy()) == 0

    def test_achiral_knots(self):
        assert homfly_table("4_1*") == homfly_table("4_1")
        assert homfly_table("4_1").mirror() == homfly_table("4_1")

    def test_aliases(self):
        assert homfly_table("3_1#3_1*") == homfly_table("square")
        assert homfly_table(" 5_2 ") == homfly_table("5_2")

    def test_unknown_knot(self):
        with pytest.raises(UnknownKnotError) as exc:
            homfly_table("7_4")
        assert "7_4" in str(exc.value)
        assert isinstance(exc.value, KeyError)


class TestConsistencyCheck:
    """Tests for the disc consistency verdict"""

    def test_consistent(self):
        report = consistency_check(1, homfly_table("3_1"), "3_1")
        assert report.verdict == CONSISTENT
        assert report.coefficient == 2
        assert report.term == "2a²"
        assert report.text() == "CONSISTENT (2a²)"

    def test_not_predicted(self):
        report = consistency_check(0, homfly_table("3_1"), "3_1")
        assert report.verdict == NOT_PREDICTED
        assert report.text() == "NOT PREDICTED (c[0, 0] = 0)"

    def test_unresolved(self):
        report = consistency_check(None, homfly_table("8_19"))
        assert report.verdict == INDETERMINATE
        assert report.text() == "INDETERMINATE (unresolved multiplicity)"

    def test_negative_terms_and_mirrors(self):
        assert consistency_check(3, homfly_table("5_2")).term == "−a⁶"
        assert consistency_check(-3, homfly_table("5_2*")).term == "−a⁻⁶"
        assert consistency_check(-1, homfly_table("4_1*")).term == "a⁻²"

    def test_unknot_embedded_disc(self):
        assert consistency_check(0, homfly_table("unknot")).term == "1"

    @pytest.mark.parametrize(
        "row", [r for r in REFERENCE_RESULTS if r.self_intersection is not None], ids=lambda r: r.label
    )
    def test_published_rows_are_consistent(self, row):
        report = consistency_check(row.self_intersection, homfly_table(row.knot))
        assert report.verdict == CONSISTENT
        assert report.term == row.term


class TestReferenceResults:
    """Tests for the stored reference rows"""

    def test_lookup(self):
        assert reference_for("3_1").self_intersection == 1
        assert reference_for("3_1#3_1*").label == "3_1#3_1*"
        assert reference_for("4_1*").term == "a⁻²"
        assert reference_for("7_4") is None

    def test_unperturbed_row(self):
        row = reference_for("8_19", perturbed=False)
        assert row.self_intersection is None
        assert row.self_intersection_text == "triple point"
        assert reference_for("8_19").self_intersection == 3
        assert reference_for("3_1", perturbed=False).self_intersection == 1
