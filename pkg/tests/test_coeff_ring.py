"""係数関数の演算のテスト"""

from fractions import Fraction

import pytest
from hypothesis import given, settings

from src.algebra.coeff_ring import (
    ChartSpec,
    CoeffFn,
    GaussianRational,
    cf_add,
    cf_angle_integral,
    cf_diff,
    cf_mul,
    cf_torus_average,
)
from src.errors import ChartMismatch, InputError, NonPeriodicDependence, ParseError
from src.utils.serialization import format_rational, parse_rational
from tests.strategies import coeff_fns, torus_fns


CHART = ChartSpec(1, 1)
CHART2 = ChartSpec(2, 1)

I = CoeffFn.action(CHART, 0)
PHI = CoeffFn.angle(CHART, 0)
COS = CoeffFn.cos(CHART, 0)
SIN = CoeffFn.sin(CHART, 0)


class TestChartSpec:
    def test_roles(self):
        chart = ChartSpec(2, 1)
        assert chart.dim == 4
        assert chart.is_action(1) and chart.is_angle(2)
        assert chart.is_periodic(0) and not chart.is_periodic(1)
        assert chart.coordinate_names == ("I1", "I2", "phi1", "phi2")

    @pytest.mark.parametrize("n, k", [(0, 0), (1, 2), (2, -1)])
    def test_invalid(self, n, k):
        with pytest.raises(InputError):
            ChartSpec(n, k)

    def test_coordinate_index(self):
        chart = ChartSpec(2, 1)
        assert chart.coordinate_index("phi1") == 2
        assert chart.coordinate_index(1) == 0
        assert chart.coordinate_index("psi2") == 3
        with pytest.raises(InputError):
            chart.coordinate_index(5)
        with pytest.raises(InputError):
            chart.coordinate_index("theta")


class TestArithmetic:
    def test_monomial_product(self):
        assert cf_mul(I, PHI) == CoeffFn.monomial(CHART, alpha=(1,), beta=(1,))

    def test_fourier_cancels(self):
        product = CoeffFn.fourier(CHART, 0, 1) * CoeffFn.fourier(CHART, 0, -1)
        assert product == 1

    def test_square_of_one_plus_cos(self):
        expected = CoeffFn.constant(CHART, Fraction(3, 2)) + COS.scale(2) + CoeffFn.cos(CHART, 0, 2).scale(Fraction(1, 2))
        assert (1 + COS) ** 2 == expected

    def test_zero_terms_pruned(self):
        assert len(cf_add(I, -I)) == 0
        assert (I - I).is_zero

    def test_chart_mismatch(self):
        with pytest.raises(ChartMismatch):
            I + CoeffFn.action(CHART2, 0)

    @settings(max_examples=40, deadline=None)
    @given(coeff_fns(CHART), coeff_fns(CHART), coeff_fns(CHART))
    def test_ring_laws(self, a, b, c):
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + b == b + a
        assert a * b == b * a

    @settings(max_examples=40, deadline=None)
    @given(coeff_fns(CHART), coeff_fns(CHART))
    def test_reality_preserved(self, a, b):
        a, b = a + a.conjugate(), b + b.conjugate()
        assert a.is_real() and b.is_real()
        assert (a + b).is_real()
        assert (a * b).is_real()
        assert a.diff(1).is_real()


class TestCalculus:
    def test_diff_fourier(self):
        for mode in (-2, 1, 3):
            wave = CoeffFn.fourier(CHART, 0, mode)
            assert cf_diff(wave, 1) == wave.scale(GaussianRational(0, mode))

    def test_diff_polynomial(self):
        f = CoeffFn.monomial(CHART2, alpha=(2, 0), beta=(0, 2))
        assert cf_diff(f, 0) == CoeffFn.monomial(CHART2, alpha=(1, 0), beta=(0, 2), coeff=2)

    def test_diff_of_phi_plus_sin(self):
        assert cf_diff(PHI + SIN, 1) == 1 + COS

    def test_angle_integrals(self):
        assert cf_angle_integral(CoeffFn.constant(CHART), 0) == PHI
        assert cf_angle_integral(COS, 0) == SIN
        assert cf_angle_integral(1 + COS, 0) == PHI + SIN

    def test_integral_vanishes_at_zero(self):
        # ∫_0^φ sin = 1 − cos
        assert cf_angle_integral(SIN, 0) == 1 - COS
        assert cf_angle_integral(PHI * COS, 0) == PHI * SIN + COS - 1

    @settings(max_examples=40, deadline=None)
    @given(coeff_fns(CHART2))
    def test_integral_inverts_diff(self, a):
        for j in range(CHART2.n):
            integral = a.angle_integral(j)
            assert integral.diff(CHART2.n + j) == a
            assert integral.set_angle_zero(j) == 0

    def test_torus_averages(self):
        assert cf_torus_average(1 + COS, 0) == 1
        assert cf_torus_average(SIN, 0) == 0
        assert cf_torus_average(CoeffFn.monomial(CHART, alpha=(2,), m=(2,)), 0) == 0

    def test_torus_average_rejects_polynomial_angle(self):
        with pytest.raises(NonPeriodicDependence):
            cf_torus_average(PHI * COS, 0)
        with pytest.raises(NonPeriodicDependence):
            cf_torus_average(CoeffFn.action(CHART2, 0), 1)

    @settings(max_examples=40, deadline=None)
    @given(torus_fns(CHART2))
    def test_average_of_derivative_vanishes(self, a):
        assert cf_torus_average(a.diff(CHART2.n), 0) == 0


class TestPredicates:
    def test_descends(self):
        assert COS.descends_to_torus()
        assert not PHI.descends_to_torus()
        assert CoeffFn.angle(CHART2, 1).descends_to_torus()

    def test_action_only(self):
        assert (I * I + 3).is_action_only()
        assert not (I * COS).is_action_only()

    def test_angle_degree(self):
        assert CoeffFn.zero(CHART).angle_degree() == -1
        assert (PHI * PHI + I).angle_degree() == 2


class TestSerialization:
    def test_rationals(self):
        assert parse_rational("3/6") == Fraction(1, 2)
        assert parse_rational(-4) == Fraction(-4)
        assert format_rational(Fraction(-2, 4)) == "-1/2"
        assert format_rational(Fraction(5)) == "5"

    @pytest.mark.parametrize("text", ["1/0", "0.5", "1e3", "abc"])
    def test_malformed_rationals(self, text):
        with pytest.raises(ParseError):
            parse_rational(text)

    @settings(max_examples=30, deadline=None)
    @given(coeff_fns(CHART2))
    def test_records_roundtrip(self, a):
        assert CoeffFn.from_records(CHART2, a.to_records()) == a

    def test_record_format(self):
        records = SIN.to_records()
        assert records[0] == {"alpha": [0], "beta": [0], "m": [-1], "re": "0", "im": "1/2"}
