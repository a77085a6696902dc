"""半古典版（ファイバーPoisson構造）のテスト"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, SymplecticData, WeylSection, delta_inv, in_base_sector
from src.engine.base import Geometry
from src.engine.semiclassical import (
    build_gamma0,
    exp_lift,
    fib_poisson,
    verify_base_sector,
    verify_flatness0,
    verify_multiplicative,
    verify_poisson_morphism,
)
from src.errors import InputError
from src.geometry.connection import curvature, sample_theorem21_connection
from tests.strategies import coeff_fns, sections


CHART = ChartSpec(1, 0)
S1 = SymplecticData.standard(CHART)
JET = Caps(6, 0)

I = CoeffFn.action(CHART, 0)
PHI = CoeffFn.angle(CHART, 0)


def sampled_state(seed: int, cap: int = 5):
    connection = sample_theorem21_connection(CHART, S1, seed)
    return build_gamma0(Geometry(CHART, S1, connection), cap)


class TestFiberPoisson:
    def test_generators(self):
        j, psi = WeylSection.fiber(CHART, JET, 0), WeylSection.fiber(CHART, JET, 1)
        assert fib_poisson(j, psi, S1) == WeylSection.scalar(CHART, JET, -1)
        assert fib_poisson(psi, j, S1) == WeylSection.scalar(CHART, JET, 1)

    def test_base_functions_are_central(self):
        f = WeylSection.scalar(CHART, JET, I * PHI)
        a = WeylSection.monomial(CHART, JET, a=(2, 1), coeff=PHI)
        assert fib_poisson(f, a, S1).is_zero

    @settings(max_examples=30, deadline=None)
    @given(
        sections(CHART, Caps(2, 0), form_degrees=(0,)),
        sections(CHART, Caps(2, 0), form_degrees=(0,)),
        sections(CHART, Caps(2, 0), form_degrees=(0,)),
    )
    def test_jacobi(self, a, b, c):
        a, b, c = a.recapped(JET), b.recapped(JET), c.recapped(JET)
        total = fib_poisson(a, fib_poisson(b, c, S1), S1) + fib_poisson(b, fib_poisson(c, a, S1), S1) + fib_poisson(c, fib_poisson(a, b, S1), S1)
        assert total.is_zero


class TestBuildGamma0:
    def test_flat(self, flat1_open, config):
        state = build_gamma0(flat1_open, 6, config)
        assert state.gamma.is_zero
        assert verify_flatness0(state).passed

    def test_curved_lowest_component(self, curved1, config):
        state = build_gamma0(curved1, 5, config)
        expected = delta_inv(curvature(curved1.connection, curved1.symplectic, state.caps).form)
        assert not expected.is_zero
        assert state.gamma.homogeneous(3) == expected

    def test_negative_cap(self, flat1_open):
        with pytest.raises(InputError):
            build_gamma0(flat1_open, -1)

    @pytest.mark.parametrize("seed", range(5))
    def test_sampled_flatness(self, seed):
        state = sampled_state(seed)
        report = verify_flatness0(state)
        assert report.passed, report.to_text()
        assert all(l == 0 and sum(a) >= 3 for (l, a, _), _ in state.gamma.terms())


class TestExpLift:
    def test_taylor_jet(self, flat1_open):
        state = build_gamma0(flat1_open, 4)
        caps = state.caps
        expected = (
            WeylSection.scalar(CHART, caps, I * I)
            + WeylSection.monomial(CHART, caps, a=(1, 0), coeff=I.scale(2))
            + WeylSection.monomial(CHART, caps, a=(2, 0))
        )
        assert exp_lift(state, I * I) == expected

    def test_unit(self, curved1):
        state = build_gamma0(curved1, 4)
        assert exp_lift(state, CoeffFn.constant(CHART, 1)) == WeylSection.scalar(CHART, state.caps, 1)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 2**16), coeff_fns(CHART, fourier=False))
    def test_linear_term(self, seed, f):
        state = sampled_state(seed, cap=4)
        jet = exp_lift(state, f)
        linear = jet.filtered(lambda l, a, g: sum(a) == 1 and not g)
        expected = WeylSection.zero(CHART, state.caps)
        for j in range(CHART.dim):
            a = [0] * CHART.dim
            a[j] = 1
            expected = expected + WeylSection.monomial(CHART, state.caps, a=a, coeff=f.diff(j))
        assert linear == expected


class TestPoissonMorphism:
    def test_flat_generators(self, flat1_open):
        state = build_gamma0(flat1_open, 4)
        assert verify_poisson_morphism(state, I, PHI).passed
        assert verify_poisson_morphism(state, I, I).passed

    @pytest.mark.parametrize("seed", range(5))
    def test_sampled_quadratics(self, seed):
        state = sampled_state(seed)
        functions = [I * I, I * PHI, PHI * PHI + I]
        for f in functions:
            for g in functions:
                assert verify_poisson_morphism(state, f, g).passed

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 4), coeff_fns(CHART, max_power=2, fourier=False), coeff_fns(CHART, max_power=2, fourier=False))
    def test_random_pairs(self, seed, f, g):
        state = sampled_state(seed, cap=4)
        assert verify_poisson_morphism(state, f, g).passed
        assert verify_multiplicative(state, f, g).passed


class TestBaseSector:
    def test_action_only_jets(self):
        state = sampled_state(7)
        report = verify_base_sector(state, [I, I * I, I * I * I])
        assert report.passed
        assert in_base_sector(exp_lift(state, I * I))

    def test_rejects_angle_dependence(self):
        with pytest.raises(InputError):
            verify_base_sector(sampled_state(7, cap=3), [PHI])
