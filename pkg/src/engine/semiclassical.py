"""ℏ を含まない半古典版の構成

D⁰ = ∂ − δ + {γ, ·}_fib を平坦にする γ を求め、指数写像
exp(f) = f̄ をジェットとして計算する。量子版と同じ漸化式を
caps (D, 0) とファイバーPoisson括弧で解く。
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, SymplecticData, WeylSection, commutative_product, fiber_poisson, in_base_sector
from src.config.settings import Settings
from src.engine.base import BaseEngine, Geometry
from src.errors import InputError
from src.geometry.symplectic import poisson_bracket
from src.utils.reports import VerificationReport


def fib_poisson(a: WeylSection, b: WeylSection, s: SymplecticData) -> WeylSection:
    """{a, b}_fib = ω^{jl} ∂a/∂y^j ∂b/∂y^l"""
    return fiber_poisson(a, b, s)


class SemiclassicalEngine(BaseEngine):
    """半古典版エンジン（括弧は {·,·}_fib）"""

    def bracket(self, a: WeylSection, b: WeylSection) -> WeylSection:
        return fiber_poisson(a, b, self.symplectic)

    def source(self) -> WeylSection:
        return self.curvature_form()

    def build(self) -> "SemiclassicalState":
        self.logger.info(f"Building semiclassical gamma with jet cap {self.caps.degree}")
        gamma = self.solve_gamma()
        return SemiclassicalState(self.geometry, gamma, self.caps, engine=self)


@dataclass
class SemiclassicalState:
    """構成済みの半古典接続"""

    geometry: Geometry
    gamma: WeylSection
    caps: Caps
    lifts: Dict[CoeffFn, WeylSection] = field(default_factory=dict, compare=False, repr=False)
    engine: Optional[SemiclassicalEngine] = field(default=None, compare=False, repr=False)

    @property
    def chart(self) -> ChartSpec:
        return self.geometry.chart

    def get_engine(self) -> SemiclassicalEngine:
        if self.engine is None:
            self.engine = SemiclassicalEngine(self.geometry, self.caps)
        return self.engine


def build_gamma0(geometry: Geometry, cap: int, config: Optional[Settings] = None) -> SemiclassicalState:
    """γ = δ⁻¹(R + ∂γ + ½{γ, γ}_fib) をジェット次数 cap まで解く"""
    if cap < 0:
        raise InputError(f"Jet cap must be non-negative, got {cap}")
    return SemiclassicalEngine(geometry, Caps(cap, 0), config).build()


def exp_lift(state: SemiclassicalState, f: CoeffFn) -> WeylSection:
    """f̄ = f + δ⁻¹(∂f̄ + {γ, f̄}_fib)"""
    if f not in state.lifts:
        state.lifts.setdefault(f, state.get_engine().lift_section(state.gamma, f))
    return state.lifts[f]


def verify_flatness0(state: SemiclassicalState, samples: Optional[Sequence[WeylSection]] = None) -> VerificationReport:
    """(D⁰)²a = 0 を Weyl 次数 cap − 2 まで検証"""
    engine = state.get_engine()
    caps = state.caps
    report = VerificationReport("semiclassical-flatness")
    report.add("gamma_hbar_free", [str(key) for key, _ in state.gamma.terms() if key[0]])
    report.add("gamma_min_degree_3", [str(key) for key, _ in state.gamma.terms() if sum(key[1]) < 3])
    residuals: List[str] = []
    if samples is None:
        samples = [WeylSection.fiber(state.chart, caps, j) for j in range(state.chart.dim)]
    for a in samples:
        residual = engine.flatness_residual(state.gamma, a.recapped(caps)).up_to_degree(caps.degree - 2)
        residuals.extend(f"{key}: {c.to_text()}" for key, c in residual.terms())
    report.add("flatness", residuals, note=f"exact up to jet degree {caps.degree - 2}")
    return report


def verify_poisson_morphism(state: SemiclassicalState, f: CoeffFn, g: CoeffFn) -> VerificationReport:
    """{exp f, exp g}_fib = exp({f, g}) を次数 cap − 1 まで検証"""
    s = state.geometry.symplectic
    degree = state.caps.degree - 1
    left = fib_poisson(exp_lift(state, f), exp_lift(state, g), s).up_to_degree(degree)
    right = exp_lift(state, poisson_bracket(f, g, s)).up_to_degree(degree)
    report = VerificationReport("poisson-morphism")
    report.add("bracket_preserved", [f"{key}: {c.to_text()}" for key, c in (left - right).terms()], note=f"modulo jet degree > {degree}")
    return report


def verify_multiplicative(state: SemiclassicalState, f: CoeffFn, g: CoeffFn) -> VerificationReport:
    """exp(fg) = exp(f)·exp(g)（ファイバー方向の可換積）"""
    s = state.geometry.symplectic
    left = exp_lift(state, f * g)
    right = commutative_product(exp_lift(state, f), exp_lift(state, g), s)
    report = VerificationReport("exp-multiplicative")
    report.add("product_preserved", [f"{key}: {c.to_text()}" for key, c in (left - right).terms()])
    return report


def verify_base_sector(state: SemiclassicalState, functions: Sequence[CoeffFn]) -> VerificationReport:
    """作用変数のみの関数の exp がベースセクターに入ることを検証"""
    report = VerificationReport("semiclassical-base-sector")
    outside = []
    for f in functions:
        if not f.is_action_only():
            raise InputError(f"Function {f.to_text()} depends on angles")
        if not in_base_sector(exp_lift(state, f)):
            outside.append(f.to_text())
    report.add("exp_in_base_sector", outside)
    return report
