"""Fedosov接続の構成とスター積

D = ∂ − δ + (1/ℏ)ad(γ) の γ を次数ごとに決め、平坦切断 σ(f) の
定数部分からスター積 f ∗ g = (σ(f) ∘ σ(g))_0 を得る。
"""

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import (
    Caps,
    WeylSection,
    delta,
    delta_inv,
    exterior_d,
    hbar_bracket,
    in_base_sector,
    moyal_constant_part,
)
from src.config.settings import Settings
from src.engine.base import BaseEngine, Geometry, track
from src.engine.series import HbarSeries
from src.engine.star import StarProduct
from src.errors import ChartMismatch, InputError, NotClosed, NotDeformationOfOmega, NotFiberVanishing
from src.forms.lagrangian import check_fiber_vanishing, normalize_curvature
from src.geometry.symplectic import poisson_bracket
from src.utils.reports import VerificationReport
from src.utils.serialization import digest


class FedosovEngine(BaseEngine):
    """量子版エンジン（括弧は (1/ℏ)[·,·]）"""

    def __init__(self, geometry: Geometry, caps: Caps, omega: Optional[WeylSection] = None, config: Optional[Settings] = None):
        """
        Args:
            geometry: 幾何データ
            caps: 打ち切り次数
            omega: 中心的曲率形式 Ω（None なら ω）
            config: 設定オブジェクト
        """
        super().__init__(geometry, caps, config)
        self.omega = omega.recapped(caps) if omega is not None else geometry.symplectic.form(caps)

    def bracket(self, a: WeylSection, b: WeylSection) -> WeylSection:
        return hbar_bracket(a, b, self.symplectic)

    def source(self) -> WeylSection:
        """−Ω + ω + R"""
        return self.symplectic.form(self.caps) - self.omega + self.curvature_form()

    def validate_omega(self) -> None:
        omega = self.omega
        if omega.chart != self.chart:
            raise ChartMismatch("Curvature form lives on another chart")
        if not omega.is_form() or (omega and omega.form_degrees() != {2}):
            raise InputError("Curvature form must be a central 2-form")
        if exterior_d(omega):
            raise NotClosed("Curvature form is not closed", detail=exterior_d(omega).to_text())
        leading = (omega - self.symplectic.form(self.caps)).filtered(lambda l, a, g: l == 0)
        if leading:
            raise NotDeformationOfOmega("Curvature form is not omega + O(hbar)", detail=leading.to_text())

    def computed_omega(self, gamma: WeylSection) -> WeylSection:
        """R + ∂γ − δγ + (1/ℏ)γ² + ω"""
        return (
            self.curvature_form()
            + self.nabla(gamma)
            - delta(gamma)
            + self.bracket(gamma, gamma).scale(Fraction(1, 2))
            + self.symplectic.form(self.caps)
        )

    def build(self) -> "FedosovState":
        self.validate_omega()
        self.logger.info(f"Building gamma with caps D={self.caps.degree}, N={self.caps.order}")
        gamma = self.solve_gamma()
        self.logger.info(f"Built gamma with {len(gamma)} terms")
        return FedosovState(self.geometry, self.omega, gamma, self.caps, engine=self)


@dataclass
class FedosovState:
    """構成済みのFedosov接続"""

    geometry: Geometry
    omega: WeylSection
    gamma: WeylSection
    caps: Caps
    lifts: Dict[CoeffFn, WeylSection] = field(default_factory=dict, compare=False, repr=False)
    engine: Optional[FedosovEngine] = field(default=None, compare=False, repr=False)

    @property
    def chart(self) -> ChartSpec:
        return self.geometry.chart

    def get_engine(self) -> FedosovEngine:
        if self.engine is None:
            self.engine = FedosovEngine(self.geometry, self.caps, self.omega)
        return self.engine

    @property
    def geometry_hash(self) -> str:
        return digest(
            {
                "geometry": self.geometry.to_records(),
                "omega": self.omega.to_records(),
                "caps": self.caps.to_record(),
            }
        )

    def with_gamma(self, gamma: WeylSection) -> "FedosovState":
        """γ を差し替えた状態（検証の対照実験用）"""
        return FedosovState(self.geometry, self.omega, gamma.recapped(self.caps), self.caps)


def build_gamma(
    geometry: Geometry,
    omega: Optional[WeylSection] = None,
    caps: Optional[Caps] = None,
    config: Optional[Settings] = None,
) -> FedosovState:
    """γ = δ⁻¹(−Ω + ω + R + ∂γ + (1/ℏ)γ²) を次数の低い順に解く

    Raises:
        NotClosed: Ω が閉じていない
        NotDeformationOfOmega: Ω ≠ ω + O(ℏ)
    """
    caps = caps or Caps.for_order(2)
    return FedosovEngine(geometry, caps, omega, config).build()


def _terms_text(section: WeylSection, limit: int = 50) -> List[str]:
    return [f"{key}: {c.to_text()}" for key, c in section.terms()[:limit]]


def generator_sections(chart: ChartSpec, caps: Caps) -> List[WeylSection]:
    """生成元 y^j"""
    return [WeylSection.fiber(chart, caps, j) for j in range(chart.dim)]


def verify_fedosov_flatness(state: FedosovState, samples: Optional[Sequence[WeylSection]] = None) -> VerificationReport:
    """D²a = (1/ℏ)[Ω, a] と Ω の整合性を検証

    D²a は Weyl 次数 D−2 まで、計算された Ω は D−1 まで厳密。
    """
    engine = state.get_engine()
    caps = state.caps
    gamma = state.gamma
    report = VerificationReport("fedosov-flatness")

    low = [f"{key}: degree {sum(key[1]) + 2 * key[0]}" for key, _ in gamma.terms() if sum(key[1]) + 2 * key[0] < 3]
    report.add("gamma_min_degree_3", low)
    report.add("gamma_normalized", _terms_text(delta_inv(gamma)), note="delta^-1 gamma = 0")
    rhs = delta_inv(engine.source() + engine.nabla(gamma) + engine.bracket(gamma, gamma).scale(Fraction(1, 2)))
    report.add("gamma_fixed_point", _terms_text(rhs - gamma))

    residuals: List[str] = []
    for a in samples if samples is not None else generator_sections(state.chart, caps):
        a = a.recapped(caps)
        residual = engine.flatness_residual(gamma, a) - engine.bracket(state.omega, a)
        residuals.extend(_terms_text(residual.up_to_degree(caps.degree - 2)))
    report.add("weyl_curvature", residuals, note=f"exact up to Weyl degree {caps.degree - 2}")

    computed = engine.computed_omega(gamma).up_to_degree(caps.degree - 1)
    report.add("omega_central", _terms_text(computed.filtered(lambda l, a, g: any(a))))
    report.add("omega_matches", _terms_text(computed - state.omega.up_to_degree(caps.degree - 1)))
    report.data["gamma_terms"] = len(gamma)
    return report


def lift(state: FedosovState, f: CoeffFn) -> WeylSection:
    """平坦切断 σ(f) = f + δ⁻¹(∂σ(f) + (1/ℏ)[γ, σ(f)])"""
    if f in state.lifts:
        return state.lifts[f]
    return state.lifts.setdefault(f, state.get_engine().lift_section(state.gamma, f))


def star(state: FedosovState, f: CoeffFn, g: CoeffFn) -> HbarSeries:
    """f ∗ g = (σ(f) ∘ σ(g))_0"""
    parts = moyal_constant_part(lift(state, f), lift(state, g), state.geometry.symplectic)
    return HbarSeries(state.chart, state.caps.order, parts)


class FedosovStar(StarProduct):
    """構成済み状態から誘導されるスター積"""

    def __init__(self, state: FedosovState):
        super().__init__(state.geometry.symplectic, state.caps.order)
        self.state = state

    def product(self, f: CoeffFn, g: CoeffFn) -> HbarSeries:
        return star(self.state, f, g)


def monomial_basis(chart: ChartSpec, max_degree: int) -> List[CoeffFn]:
    """I と φ の多項式単項式（全次数 ≤ max_degree、次数順）"""
    exponents = [
        e for e in itertools.product(range(max_degree + 1), repeat=chart.dim) if sum(e) <= max_degree
    ]
    exponents.sort(key=lambda e: (sum(e), tuple(-x for x in e)))
    return [CoeffFn.monomial(chart, alpha=e[:chart.n], beta=e[chart.n:]) for e in exponents]


@dataclass
class StarTable:
    """Q_l(f, g) の表"""

    caps: Caps
    geometry_hash: str
    basis: List[str]
    entries: Dict[Tuple[str, str, int], CoeffFn]
    possibly_truncated: bool = False

    def value(self, f: str, g: str, l: int) -> Optional[CoeffFn]:
        return self.entries.get((f, g, l))

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"f": f, "g": g, "order": l, "value": value.to_text()}
            for (f, g, l), value in sorted(self.entries.items(), key=lambda item: (self.basis.index(item[0][0]), self.basis.index(item[0][1]), item[0][2]))
        ]
        return pd.DataFrame(rows, columns=["f", "g", "order", "value"])

    def missing_entries(self) -> List[str]:
        """基底の全ての組と次数 0..l_max のうち欠けている項目"""
        top = max((l for _, _, l in self.entries), default=0)
        names = ["f", "g", "order"]
        expected = pd.MultiIndex.from_product([self.basis, self.basis, range(top + 1)], names=names)
        present = pd.MultiIndex.from_tuples(list(self.entries), names=names) if self.entries else expected[:0]
        return [f"Q{l}({f}, {g})" for f, g, l in expected.difference(present)]

    def to_records(self) -> Dict[str, object]:
        return {
            "caps": self.caps.to_record(),
            "geometry_hash": self.geometry_hash,
            "basis": list(self.basis),
            "possibly_truncated": self.possibly_truncated,
            "entries": [
                {"f": f, "g": g, "order": l, "value": value.to_records()}
                for (f, g, l), value in sorted(self.entries.items())
            ],
        }

    @classmethod
    def from_records(cls, chart: ChartSpec, records: Dict[str, object]) -> "StarTable":
        caps = Caps(**records["caps"])
        entries = {
            (item["f"], item["g"], int(item["order"])): CoeffFn.from_records(chart, item["value"])
            for item in records["entries"]
        }
        return cls(caps, records["geometry_hash"], list(records["basis"]), entries, bool(records.get("possibly_truncated", False)))


def star_table(state: FedosovState, max_degree: int, order: Optional[int] = None) -> StarTable:
    """単項式の組ごとの Q_l(f, g)（l ≤ order）を表にする"""
    order = state.caps.order if order is None else min(order, state.caps.order)
    basis = monomial_basis(state.chart, max_degree)
    labels = [f.to_text() for f in basis]
    pairs = [(i, j) for i in range(len(basis)) for j in range(len(basis))]

    def compute(pair: Tuple[int, int]) -> HbarSeries:
        return star(state, basis[pair[0]], basis[pair[1]])

    results = state.get_engine().process_with_progress(pairs, compute, desc="star table")
    entries: Dict[Tuple[str, str, int], CoeffFn] = {}
    for (i, j), series in zip(pairs, results):
        for l in range(order + 1):
            entries[(labels[i], labels[j], l)] = series.coefficient(l)
    return StarTable(state.caps, state.geometry_hash, labels, entries, state.caps.degree < 2 * state.caps.order)


def associativity_triples(size: int, max_triples: int, seed: int = 0) -> List[Tuple[int, int, int]]:
    """結合律を調べる三つ組の添字（全数または一様抽出、辞書順）"""
    total = size ** 3
    if total <= max_triples:
        picks = range(total)
    else:
        rng = np.random.default_rng(seed)
        picks = sorted(int(x) for x in rng.choice(total, size=max_triples, replace=False))
    return [(p // (size * size), (p // size) % size, p % size) for p in picks]


def verify_star_axioms(
    product: "StarProduct | FedosovState",
    functions: Sequence[CoeffFn],
    max_triples: Optional[int] = None,
    config: Optional[Settings] = None,
    seed: int = 0,
) -> VerificationReport:
    """単位元、古典極限、主要交換子、結合律（ℏ^{N+1} を法として）を検証

    結合律は全ての三つ組が max_triples 以下なら全数、それ以外は seed から
    重複なしに一様抽出した三つ組で調べる。
    """
    if isinstance(product, FedosovState):
        product = FedosovStar(product)
    config = config or Settings()
    max_triples = max_triples if max_triples is not None else config.verification["max_triples"]
    chart, order = product.chart, product.order
    one = CoeffFn.constant(chart, 1)
    report = VerificationReport("star-axioms")

    unit, classical, leading = [], [], []
    for f in functions:
        expected = HbarSeries.of(f, order)
        if product.product(one, f) != expected or product.product(f, one) != expected:
            unit.append(f"1 * {f.to_text()} != {f.to_text()}")
    for f, g in itertools.product(functions, repeat=2):
        fg = product.product(f, g)
        if fg.coefficient(0) != f * g:
            classical.append(f"Q0({f.to_text()}, {g.to_text()}) = {fg.coefficient(0).to_text()}")
        if order >= 1:
            comm = fg - product.product(g, f)
            bracket = poisson_bracket(f, g, product.symplectic)
            if comm.coefficient(0) or comm.coefficient(1) != bracket:
                leading.append(f"[{f.to_text()}, {g.to_text()}] = {comm.to_text()}, expected hbar*({bracket.to_text()})")
    report.add("unit", unit)
    report.add("classical_limit", classical)
    report.add("leading_commutator", leading)

    triples = associativity_triples(len(functions), max_triples, seed)
    assoc = []
    for i, j, k in track(triples, "associativity", config):
        f, g, h = functions[i], functions[j], functions[k]
        left = product.series_product(product.product(f, g), HbarSeries.of(h, order))
        right = product.series_product(HbarSeries.of(f, order), product.product(g, h))
        if left != right:
            assoc.append(f"({f.to_text()}, {g.to_text()}, {h.to_text()}): {(left - right).to_text()}")
    report.add("associativity", assoc, note=f"modulo hbar^{order + 1}")
    return report


def quantize_lagrangian(
    geometry: Geometry,
    omega: WeylSection,
    functions: Iterable[CoeffFn],
    caps: Optional[Caps] = None,
    config: Optional[Settings] = None,
) -> Tuple[VerificationReport, FedosovState]:
    """ファイバー消滅曲率を正規化して構成し、作用変数のみの関数の積が変形されないことを確認"""
    caps = caps or Caps.for_order(2)
    omega = omega.recapped(caps)
    report = VerificationReport("quantize-lagrangian")
    if not check_fiber_vanishing(omega):
        raise NotFiberVanishing("Curvature form does not vanish on the fibers", detail=omega.to_text())
    normalized, primitive = normalize_curvature(omega, geometry.symplectic)
    report.data["normalized_omega"] = normalized.to_text()
    report.data["primitive"] = primitive.to_text()

    state = build_gamma(geometry, normalized, caps, config)
    functions = list(functions)
    outside, deformed = [], []
    for f in functions:
        if not f.is_action_only():
            raise InputError(f"Function {f.to_text()} depends on angles")
        if not in_base_sector(lift(state, f)):
            outside.append(f.to_text())
    for f, g in itertools.product(functions, repeat=2):
        corrections = star(state, f, g).corrections()
        if not corrections.is_zero:
            deformed.append(f"{f.to_text()} * {g.to_text()}: {corrections.to_text()}")
    report.add("lifts_in_base_sector", outside)
    report.add("products_undeformed", deformed)
    return report, state
