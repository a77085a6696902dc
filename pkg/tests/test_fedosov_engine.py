"""Fedosov接続の構成とスター積のテスト"""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, SymplecticData, WeylSection, in_base_sector
from src.engine.base import Geometry
from src.engine.equivalence import apply_quantum_corrections, verify_equivalence
from src.engine.fedosov import (
    FedosovStar,
    associativity_triples,
    build_gamma,
    lift,
    monomial_basis,
    quantize_lagrangian,
    star,
    star_table,
    verify_fedosov_flatness,
    verify_star_axioms,
)
from src.engine.series import DifferentialOperator, HbarSeries, OperatorSeries
from src.engine.star import ConjugatedStar, MoyalStar, OppositeStar
from src.errors import NotClosed, NotDeformationOfOmega
from src.geometry.connection import sample_theorem21_connection
from src.geometry.symplectic import poisson_bracket
from tests.conftest import connection_geometry
from tests.strategies import coeff_fns


CHART = ChartSpec(1, 0)
CAPS = Caps.for_order(2)
S1 = SymplecticData.standard(CHART)

I = CoeffFn.action(CHART, 0)
PHI = CoeffFn.angle(CHART, 0)


def sampled_geometry(chart: ChartSpec, seed: int) -> Geometry:
    symplectic = SymplecticData.standard(chart)
    return Geometry(chart, symplectic, sample_theorem21_connection(chart, symplectic, seed))


def hbar_omega(chart: ChartSpec, caps: Caps, coeff=1) -> WeylSection:
    """ω + ℏ·coeff·dI¹∧dφ¹"""
    symplectic = SymplecticData.standard(chart)
    return symplectic.form(caps) + WeylSection.monomial(chart, caps, l=1, g=(0, chart.n), coeff=coeff)


class TestBuildGamma:
    def test_flat_gamma_vanishes(self, flat1_open, config):
        state = build_gamma(flat1_open, caps=CAPS, config=config)
        assert state.gamma.is_zero
        assert verify_fedosov_flatness(state).passed

    def test_lowest_component(self, flat1_open, config):
        state = build_gamma(flat1_open, hbar_omega(CHART, CAPS), CAPS, config)
        # γ₃ = −(ℏ/2)(J dφ − ψ dI)
        expected = WeylSection.monomial(CHART, CAPS, l=1, a=(1, 0), g=(1,), coeff=Fraction(-1, 2)) + WeylSection.monomial(
            CHART, CAPS, l=1, a=(0, 1), g=(0,), coeff=Fraction(1, 2)
        )
        assert state.gamma.homogeneous(3) == expected
        assert verify_fedosov_flatness(state).passed

    def test_rejects_non_closed(self, config):
        chart = ChartSpec(2, 0)
        caps = Caps.for_order(1)
        omega = SymplecticData.standard(chart).form(caps) + WeylSection.monomial(
            chart, caps, l=1, g=(0, 1), coeff=CoeffFn.angle(chart, 0)
        )
        with pytest.raises(NotClosed):
            build_gamma(Geometry.flat(chart), omega, caps, config)

    def test_rejects_classical_change(self, flat1_open, config):
        omega = S1.form(CAPS).scale(2)
        with pytest.raises(NotDeformationOfOmega):
            build_gamma(flat1_open, omega, CAPS, config)

    @pytest.mark.parametrize("seed", range(10))
    def test_sampled_geometries_are_flat(self, seed, config):
        geometry = sampled_geometry(CHART, seed)
        state = build_gamma(geometry, hbar_omega(CHART, CAPS, Fraction(seed % 3, 2)), CAPS, config)
        report = verify_fedosov_flatness(state)
        assert report.passed, report.to_text()
        assert all(sum(a) + 2 * l >= 3 for (l, a, _), _ in state.gamma.terms())

    def test_two_degrees_of_freedom(self, config):
        chart = ChartSpec(2, 1)
        caps = Caps(4, 1)
        state = build_gamma(sampled_geometry(chart, 3), hbar_omega(chart, caps), caps, config)
        assert verify_fedosov_flatness(state).passed

    def test_corrupted_gamma_fails(self, flat1_open, config):
        state = build_gamma(flat1_open, hbar_omega(CHART, CAPS), CAPS, config)
        key, coeff = next(item for item in state.gamma.terms() if item[0][2] == (1,))
        flipped = state.gamma - WeylSection(CHART, CAPS, {key: coeff.scale(2)})
        report = verify_fedosov_flatness(state.with_gamma(flipped))
        assert not report.passed
        assert "gamma_fixed_point" in report.violations


class TestLift:
    def test_taylor_lift(self, flat1_open, config):
        state = build_gamma(flat1_open, caps=CAPS, config=config)
        expected = (
            WeylSection.scalar(CHART, CAPS, I * I)
            + WeylSection.monomial(CHART, CAPS, a=(1, 0), coeff=I.scale(2))
            + WeylSection.monomial(CHART, CAPS, a=(2, 0))
        )
        assert lift(state, I * I) == expected

    def test_unit(self, curved1, config):
        state = build_gamma(curved1, caps=CAPS, config=config)
        assert lift(state, CoeffFn.constant(CHART, 1)) == WeylSection.scalar(CHART, CAPS, 1)

    def test_cache_is_idempotent(self, curved1, config):
        state = build_gamma(curved1, caps=CAPS, config=config)
        first = lift(state, I * PHI)
        assert lift(state, I * PHI) is first

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**16), coeff_fns(CHART, fourier=False))
    def test_lift_is_flat(self, seed, f):
        state = build_gamma(sampled_geometry(CHART, seed), hbar_omega(CHART, CAPS), CAPS)
        sigma = lift(state, f)
        assert sigma.constant_part().get(0, CoeffFn.zero(CHART)) == f
        assert all(l == 0 for l in sigma.constant_part())
        engine = state.get_engine()
        assert engine.connection_d(state.gamma, sigma).up_to_degree(CAPS.degree - 1).is_zero


class TestStar:
    def test_commutator(self, flat1_open, config):
        state = build_gamma(flat1_open, caps=CAPS, config=config)
        commutator = star(state, I, PHI) - star(state, PHI, I)
        # ℏ{I, φ} = −ℏ
        assert commutator == HbarSeries(CHART, 2, {1: CoeffFn.constant(CHART, -1)})

    def test_unit(self, curved1, config):
        state = build_gamma(curved1, hbar_omega(CHART, CAPS), CAPS, config)
        one = CoeffFn.constant(CHART, 1)
        f = I * PHI + PHI * PHI
        assert star(state, one, f) == HbarSeries.of(f, 2)
        assert star(state, f, one) == HbarSeries.of(f, 2)

    def test_flat_matches_moyal(self, flat1_open, config):
        state = build_gamma(flat1_open, caps=Caps.for_order(3), config=config)
        oracle = MoyalStar(S1, 3)
        basis = monomial_basis(CHART, 4)
        for f in basis:
            for g in basis:
                assert star(state, f, g) == oracle.product(f, g)

    def test_flat_axioms(self, flat1_open, config):
        state = build_gamma(flat1_open, caps=Caps.for_order(3), config=config)
        report = verify_star_axioms(state, [I, PHI, I * PHI, PHI * PHI], max_triples=27, config=config)
        assert report.passed, report.to_text()

    @pytest.mark.parametrize("seed", [1, 4])
    def test_sampled_axioms(self, seed, config):
        state = build_gamma(sampled_geometry(CHART, seed), hbar_omega(CHART, CAPS), CAPS, config)
        report = verify_star_axioms(state, monomial_basis(CHART, 4), max_triples=40, config=config, seed=seed)
        assert report.passed, report.to_text()

    def test_curved_axioms(self, curved1, config):
        state = build_gamma(curved1, hbar_omega(CHART, CAPS), CAPS, config)
        report = verify_star_axioms(state, monomial_basis(CHART, 4), max_triples=40, config=config, seed=7)
        assert report.passed, report.to_text()

    @pytest.mark.parametrize("chart", [ChartSpec(1, 0), ChartSpec(2, 0)])
    @pytest.mark.parametrize("seed", range(10))
    def test_action_only_product_undeformed(self, chart, seed, config):
        caps = Caps.for_order(2)
        state = build_gamma(sampled_geometry(chart, seed), hbar_omega(chart, caps), caps, config)
        first, last = CoeffFn.action(chart, 0), CoeffFn.action(chart, chart.n - 1)
        assert star(state, first, last * last) == HbarSeries.of(first * last * last, 2)

    def test_opposite_fails_axioms(self, config):
        report = verify_star_axioms(OppositeStar(MoyalStar(S1, 2)), [I, PHI], config=config)
        assert report.violations == ["leading_commutator"]


class TestAssociativityTriples:
    def test_exhaustive_when_small(self):
        assert associativity_triples(3, 27) == [(i, j, k) for i in range(3) for j in range(3) for k in range(3)]

    def test_sampled_triples_cover_all_positions(self):
        triples = associativity_triples(15, 40, seed=1)
        assert len(set(triples)) == 40
        assert triples == sorted(triples)
        assert len({t[0] for t in triples}) > 1
        assert all(0 <= x < 15 for t in triples for x in t)

    def test_deterministic(self):
        assert associativity_triples(10, 30, seed=5) == associativity_triples(10, 30, seed=5)
        assert associativity_triples(10, 30, seed=5) != associativity_triples(10, 30, seed=6)


class TestStarTable:
    def test_flat_first_order(self, flat1_open, config):
        state = build_gamma(flat1_open, caps=CAPS, config=config)
        table = star_table(state, 2)
        basis = monomial_basis(CHART, 2)
        assert table.basis == [f.to_text() for f in basis]
        assert not table.possibly_truncated
        for f in basis:
            for g in basis:
                expected = poisson_bracket(f, g, S1).scale(Fraction(1, 2))
                assert table.value(f.to_text(), g.to_text(), 1) == expected
                assert table.value(f.to_text(), g.to_text(), 0) == f * g

    def test_unit_row(self, curved1, config):
        state = build_gamma(curved1, hbar_omega(CHART, CAPS), CAPS, config)
        table = star_table(state, 2)
        one = table.basis[0]
        for g in table.basis:
            for l in (1, 2):
                assert table.value(one, g, l).is_zero
                assert table.value(g, one, l).is_zero

    def test_frame(self, flat1_open, config):
        table = star_table(build_gamma(flat1_open, caps=CAPS, config=config), 1, order=1)
        frame = table.to_frame()
        assert list(frame.columns) == ["f", "g", "order", "value"]
        assert len(frame) == 3 * 3 * 2

    def test_missing_entries(self, flat1_open, config):
        table = star_table(build_gamma(flat1_open, caps=CAPS, config=config), 1)
        assert table.missing_entries() == []
        f, g = table.basis[1], table.basis[2]
        del table.entries[(f, g, 2)]
        assert table.missing_entries() == [f"Q2({f}, {g})"]


class TestLagrangianQuantization:
    @pytest.mark.parametrize("chart", [ChartSpec(1, 1), ChartSpec(2, 1)])
    @pytest.mark.parametrize("seed", range(10))
    def test_compliant_connections(self, chart, seed, config):
        caps = Caps.for_order(2)
        symplectic = SymplecticData.standard(chart)
        cos = CoeffFn.cos(chart, 0)
        # ℏ(1 + cos φ¹) dφ¹∧dI¹
        omega = symplectic.form(caps) + WeylSection.monomial(chart, caps, l=1, g=(chart.n, 0), coeff=1 + cos)
        actions = [CoeffFn.action(chart, alpha) for alpha in range(chart.n)]
        functions = actions + [actions[0] * actions[-1]]
        report, state = quantize_lagrangian(sampled_geometry(chart, seed), omega, functions, caps, config)
        assert report.passed, report.to_text()
        assert verify_fedosov_flatness(state).passed

    def test_non_compliant_connection_deforms(self, config):
        c = Fraction(1)
        geometry = connection_geometry(CHART, [((0, 1, 1), CoeffFn.constant(CHART, c))])
        state = build_gamma(geometry, caps=CAPS, config=config)
        assert not in_base_sector(lift(state, I))
        functions = [I, I * I, I * I * I]
        corrections = [star(state, f, g).corrections() for f in functions for g in functions]
        assert any(not item.is_zero for item in corrections)


class TestEquivalence:
    SAMPLES = [I, PHI, I * PHI, PHI * PHI]

    def test_identity(self, config):
        moyal = MoyalStar(S1, 2)
        report = verify_equivalence(OperatorSeries.identity(CHART), moyal, moyal, self.SAMPLES, config=config)
        assert report.passed

    def test_opposite(self, config):
        moyal = MoyalStar(S1, 2)
        report = verify_equivalence(OperatorSeries.identity(CHART), moyal, OppositeStar(moyal), self.SAMPLES, config=config)
        assert report.violations == ["intertwining"]

    @pytest.mark.parametrize("order", [None, 2, 3, 5])
    def test_mixed_orders(self, config, order):
        report = verify_equivalence(OperatorSeries.identity(CHART), MoyalStar(S1, 3), MoyalStar(S1, 2), self.SAMPLES, order=order, config=config)
        assert report.passed, report.to_text()
        assert report.check("intertwining").note == "modulo hbar^3"

    def test_conjugated(self, config):
        moyal = MoyalStar(S1, 3)
        laplacian = DifferentialOperator(CHART, [((2, 0), CoeffFn.constant(CHART, 1)), ((0, 2), CoeffFn.constant(CHART, 1))])
        gauge = OperatorSeries(CHART, {1: laplacian})
        conjugated = ConjugatedStar(moyal, gauge)
        samples = self.SAMPLES + [I * I * PHI]
        assert verify_equivalence(gauge, conjugated, moyal, samples, config=config).passed
        assert verify_star_axioms(conjugated, [I, PHI, I * I], config=config).passed

    def test_fedosov_flat_equals_moyal(self, flat1_open, config):
        fedosov = FedosovStar(build_gamma(flat1_open, caps=CAPS, config=config))
        report = verify_equivalence(OperatorSeries.identity(CHART), fedosov, MoyalStar(S1, 2), self.SAMPLES, config=config)
        assert report.passed


class TestQuantumCorrections:
    def test_identity(self):
        f = I * I + PHI
        assert apply_quantum_corrections(OperatorSeries.identity(CHART), f, 3) == HbarSeries.of(f, 3)

    def test_geometric_inversion(self):
        derivative = DifferentialOperator(CHART, [((1, 0), CoeffFn.constant(CHART, 1))])
        gauge = OperatorSeries(CHART, {1: derivative})
        result = apply_quantum_corrections(gauge, I * I * I, 3)
        expected = HbarSeries(CHART, 3, {0: I * I * I, 1: (I * I).scale(-3), 2: I.scale(6), 3: CoeffFn.constant(CHART, -6)})
        assert result == expected

    @settings(max_examples=30, deadline=None)
    @given(coeff_fns(CHART, fourier=False), coeff_fns(CHART, max_terms=2, fourier=False))
    def test_inverse_composes_to_identity(self, f, coeff):
        gauge = OperatorSeries(
            CHART,
            {1: DifferentialOperator(CHART, [((0, 1), coeff)]), 2: DifferentialOperator(CHART, [((1, 1), CoeffFn.constant(CHART, 1))])},
        )
        assert gauge.apply_series(apply_quantum_corrections(gauge, f, 3)) == HbarSeries.of(f, 3)
