"""Weyl代数の演算のテスト"""

from fractions import Fraction

import pytest
from hypothesis import given, settings

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import (
    Caps,
    SymplecticData,
    WeylSection,
    delta,
    delta_inv,
    exterior_d,
    filtration_degree,
    hbar_bracket,
    hdiv,
    in_base_sector,
    moyal,
    supercommutator,
    weyl_degree,
)
from src.errors import CapMismatch, FourierInFiltration, InputError, NotDivisible
from tests.strategies import sections


CHART = ChartSpec(1, 1)
CHART2 = ChartSpec(2, 0)
CAPS = Caps(4, 2)
S1 = SymplecticData.standard(CHART)
S2 = SymplecticData.standard(CHART2)


def y(j, chart=CHART, caps=CAPS):
    return WeylSection.fiber(chart, caps, j)


def scalar(value, chart=CHART, caps=CAPS, l=0):
    return WeylSection.scalar(chart, caps, value, l=l)


def dx(*slots, chart=CHART, caps=CAPS, coeff=1):
    return WeylSection.monomial(chart, caps, g=slots, coeff=coeff)


class TestSections:
    def test_caps_drop_terms(self):
        section = WeylSection.monomial(CHART, Caps(2, 1), a=(2, 1))
        assert section.is_zero
        assert WeylSection.monomial(CHART, Caps(2, 0), l=1).is_zero

    def test_form_sign_normalized(self):
        assert dx(1, 0) == -dx(0, 1)
        assert dx(0, 0).is_zero

    def test_invalid_key(self):
        with pytest.raises(InputError):
            WeylSection(CHART, CAPS, {(0, (0, 0), (1, 0)): CoeffFn.constant(CHART)})

    def test_cap_mismatch(self):
        with pytest.raises(CapMismatch):
            y(0) + y(0, caps=Caps(6, 3))

    def test_weyl_degree(self):
        assert weyl_degree(1, (1, 1)) == 4

    @settings(max_examples=25, deadline=None)
    @given(sections(CHART, CAPS))
    def test_records_roundtrip(self, a):
        assert WeylSection.from_records(CHART, CAPS, a.to_records()) == a


class TestMoyal:
    def test_generators(self):
        # y¹∘y² = y¹y² + (ℏ/2)ω^{12}
        product = moyal(y(0), y(1), S1)
        expected = WeylSection.monomial(CHART, CAPS, a=(1, 1)) + scalar(Fraction(-1, 2), l=1)
        assert product == expected

    def test_unit(self):
        a = y(0) + WeylSection.monomial(CHART, CAPS, a=(1, 2))
        assert moyal(scalar(1), a, S1) == a
        assert moyal(a, scalar(1), S1) == a

    def test_commutator(self):
        assert supercommutator(y(0), y(1), S1) == scalar(-1, l=1)
        assert supercommutator(y(1), y(0), S1) == scalar(1, l=1)

    def test_central_forms(self):
        omega = S1.form(CAPS)
        a = y(0) + WeylSection.monomial(CHART, CAPS, a=(0, 2), coeff=CoeffFn.cos(CHART, 0))
        assert supercommutator(omega, a, S1).is_zero

    @settings(max_examples=25, deadline=None)
    @given(sections(CHART, CAPS, form_degrees=(0,)))
    def test_even_self_commutator(self, a):
        assert supercommutator(a, a, S1).is_zero

    @settings(max_examples=50, deadline=None)
    @given(
        sections(CHART2, Caps(6, 3), form_degrees=(0, 1)),
        sections(CHART2, Caps(6, 3), form_degrees=(0, 1)),
        sections(CHART2, Caps(6, 3), form_degrees=(0,)),
    )
    def test_associativity(self, a, b, c):
        assert moyal(moyal(a, b, S2), c, S2) == moyal(a, moyal(b, c, S2), S2)

    def test_leading_commutator_on_taylor_lifts(self):
        # f = I², g = φ: Taylor lifts (I+J)², φ+ψ
        f = scalar(CoeffFn.action(CHART, 0, 2)) + WeylSection.monomial(CHART, CAPS, a=(1, 0), coeff=CoeffFn.action(CHART, 0, 1).scale(2)) + WeylSection.monomial(CHART, CAPS, a=(2, 0))
        g = scalar(CoeffFn.angle(CHART, 0)) + y(1)
        commutator = (moyal(f, g, S1) - moyal(g, f, S1)).constant_part()
        # ℏ{I², φ} = −2ℏI
        assert commutator[1] == CoeffFn.action(CHART, 0).scale(-2)


class TestDelta:
    def test_delta(self):
        product = WeylSection.monomial(CHART, CAPS, a=(1, 1))
        assert delta(product) == WeylSection.monomial(CHART, CAPS, a=(0, 1), g=(0,)) + WeylSection.monomial(CHART, CAPS, a=(1, 0), g=(1,))
        assert delta(scalar(CoeffFn.action(CHART, 0))).is_zero

    def test_delta_inv(self):
        assert delta_inv(WeylSection.monomial(CHART, CAPS, a=(1, 0), g=(1,))) == WeylSection.monomial(CHART, CAPS, a=(1, 1), coeff=Fraction(1, 2))
        expected = WeylSection.monomial(CHART, CAPS, a=(1, 0), g=(1,), coeff=Fraction(1, 2)) - WeylSection.monomial(CHART, CAPS, a=(0, 1), g=(0,), coeff=Fraction(1, 2))
        assert delta_inv(dx(0, 1)) == expected
        assert delta_inv(scalar(7)).is_zero

    @settings(max_examples=100, deadline=None)
    @given(sections(CHART2, Caps(3, 1), max_terms=4))
    def test_hodge_relation(self, a):
        # δ⁻¹ が caps を超えないよう1つ低い次数で生成する
        a = a.recapped(Caps(4, 1))
        zeros = (0,) * CHART2.dim
        a00 = a.filtered(lambda l, mono, g: mono == zeros and not g)
        assert delta(delta_inv(a)) + delta_inv(delta(a)) + a00 == a

    @settings(max_examples=30, deadline=None)
    @given(sections(CHART2, Caps(4, 1)))
    def test_nilpotent(self, a):
        assert delta(delta(a)).is_zero
        assert delta_inv(delta_inv(a)).is_zero
        assert exterior_d(exterior_d(a)).is_zero


class TestHbar:
    def test_hdiv(self):
        assert hdiv(scalar(-1, l=1)) == scalar(-1)
        assert hdiv(WeylSection.monomial(CHART, CAPS, l=2, a=(0, 0))) == scalar(1, l=1)

    def test_hdiv_rejects(self):
        with pytest.raises(NotDivisible):
            hdiv(y(0))

    def test_hbar_bracket_keeps_caps(self):
        bracket = hbar_bracket(WeylSection.monomial(CHART, CAPS, a=(2, 0)), y(1), S1)
        assert bracket.caps == CAPS
        # (1/ℏ)[J², ψ] = −2J
        assert bracket == y(0).scale(-2)


class TestFiltration:
    def test_examples(self):
        chart = ChartSpec(2, 0)
        caps = Caps(4, 1)
        assert filtration_degree(scalar(CoeffFn.action(chart, 0, 3), chart=chart, caps=caps)) == 0
        term = WeylSection.monomial(chart, caps, a=(1, 0, 0, 0), g=(2,), coeff=CoeffFn.angle(chart, 1))
        assert filtration_degree(term) == 2
        assert filtration_degree(WeylSection.zero(chart, caps)) == -1

    def test_fourier_rejected(self):
        with pytest.raises(FourierInFiltration):
            filtration_degree(scalar(CoeffFn.cos(CHART, 0)))

    @settings(max_examples=100, deadline=None)
    @given(sections(CHART2, Caps(4, 1)), sections(CHART2, Caps(4, 1)))
    def test_bounds(self, a, b):
        q, r = filtration_degree(a), filtration_degree(b)
        if q >= 0 and r >= 0:
            assert filtration_degree(supercommutator(a, b, S2)) <= q + r - 1
        assert filtration_degree(delta(a)) <= q
        assert filtration_degree(delta_inv(a)) <= q

    def test_base_sector(self):
        assert in_base_sector(y(0).scale(CoeffFn.action(CHART, 0)) + dx(0))
        assert not in_base_sector(y(1))
        assert not in_base_sector(dx(1))
        assert not in_base_sector(scalar(CoeffFn.cos(CHART, 0)))
