"""ラグランジュファイブレーション上の閉形式の計算

形式は y 次数0の WeylSection として扱う（ℏ 次数を持ってよい）。
dφ^j ∧ dI^l は正規順序 (I^l, φ^j) に係数の符号を反転して格納される。
"""

import logging
from fractions import Fraction
from typing import Dict, Optional, Tuple

from src.algebra.coeff_ring import CoeffFn
from src.algebra.weyl import SymplecticData, WeylSection, exterior_d
from src.errors import InputError, NonPeriodicInput, NotBaseForm, NotClosed, NotDeformationOfOmega, NotFiberVanishing


logger = logging.getLogger(__name__)

FormOnChart = WeylSection


def require_form(a: WeylSection, degree: Optional[int] = None) -> WeylSection:
    """ファイバー変数を含まない形式であることを確認"""
    if not a.is_form():
        raise InputError("Expected a differential form without fiber variables")
    if degree is not None and a and a.form_degrees() != {degree}:
        raise InputError(f"Expected a {degree}-form, got degrees {sorted(a.form_degrees())}")
    return a


def _require_closed(a: WeylSection) -> None:
    residual = exterior_d(a)
    if residual:
        raise NotClosed("Form is not closed", detail=residual.to_text())


def exterior_derivative(a: FormOnChart) -> FormOnChart:
    """係数ごとの外微分"""
    return exterior_d(require_form(a))


def check_fiber_vanishing(a: FormOnChart) -> bool:
    """dI を含まない項（0形式を含む）が無ければ True"""
    n = require_form(a).chart.n
    return all(any(j < n for j in g) for (_, _, g), _ in a.items())


def base_primitive(a0: FormOnChart) -> FormOnChart:
    """作用変数のみの閉形式に対する放射ホモトピー原始形式

    c I^α dI^g ↦ c I^α / (|g| + |α|) Σ_t (−1)^t I^{g_t} dI^{g∖t}
    """
    require_form(a0)
    n = a0.chart.n
    for (_, _, g), c in a0.items():
        if not c.is_action_only() or any(j >= n for j in g):
            raise NotBaseForm("Base primitive needs a form in dI with action-only coefficients", detail=g)
    _require_closed(a0)
    terms: Dict = {}
    zeros = (0,) * a0.chart.dim
    for (l, _, g), c in a0.items():
        if not g:
            continue
        for (alpha, _, _), value in c.terms():
            weight = Fraction(1, len(g) + sum(alpha))
            mono = CoeffFn.monomial(a0.chart, alpha=alpha, coeff=value)
            for t, slot in enumerate(g):
                key = (l, zeros, g[:t] + g[t + 1:])
                term = (mono * CoeffFn.action(a0.chart, slot)).scale(weight * (-1 if t % 2 else 1))
                terms[key] = terms[key] + term if key in terms else term
    return WeylSection(a0.chart, a0.caps, terms)


def _angle_action_components(a: WeylSection) -> Dict[Tuple[int, int, int], CoeffFn]:
    """(l, j, m) ↦ g_{jm}（dφ^j ∧ dI^m の係数）"""
    n = a.chart.n
    out: Dict[Tuple[int, int, int], CoeffFn] = {}
    for (l, _, g), c in a.items():
        if len(g) == 2 and g[0] < n <= g[1]:
            out[(l, g[1] - n, g[0])] = -c
    return out


def _angle_primitive(a: WeylSection) -> WeylSection:
    """Σ_m F_m dI^m, F_m = Σ_j ∫_0^{φ^j} g_{jm}(φ^1..φ^j, 0, ..., 0) dφ^j"""
    n = a.chart.n
    zeros = (0,) * a.chart.dim
    terms: Dict = {}
    for (l, j, m), g in _angle_action_components(a).items():
        for later in range(j + 1, n):
            g = g.set_angle_zero(later)
        primitive = g.angle_integral(j)
        key = (l, zeros, (m,))
        terms[key] = terms[key] + primitive if key in terms else primitive
    return WeylSection(a.chart, a.caps, terms)


def lemma33_primitive(a: FormOnChart) -> FormOnChart:
    """ファイバー上で消える閉2形式の、ファイバー上で消える原始1形式 β（dβ = a）"""
    require_form(a, degree=2)
    _require_closed(a)
    if not check_fiber_vanishing(a):
        raise NotFiberVanishing("Form does not vanish on the fibers")
    angle_part = _angle_primitive(a)
    remainder = a - exterior_d(angle_part)
    beta = angle_part + base_primitive(remainder)
    logger.debug(f"Primitive with {len(beta)} terms")
    return beta


def is_base_oneform(b: FormOnChart) -> bool:
    """閉じたファイバー消滅1形式の係数が作用変数のみに依存するか"""
    require_form(b, degree=1)
    _require_closed(b)
    if not check_fiber_vanishing(b):
        raise NotFiberVanishing("One-form does not vanish on the fibers")
    return all(c.is_action_only() for _, c in b.items())


def prop32_normalize(om: FormOnChart) -> Tuple[FormOnChart, FormOnChart]:
    """閉2形式をフィルトレーション次数1以下の代表元に正規化

    Returns:
        (Ω', γ)。Ω − Ω' = dγ で、γ はトーラス上に降りる。

    Raises:
        NotClosed, NotFiberVanishing, NonPeriodicInput
    """
    require_form(om, degree=2)
    _require_closed(om)
    if not check_fiber_vanishing(om):
        raise NotFiberVanishing("Form does not vanish on the fibers")
    chart = om.chart
    for key, c in om.items():
        if not c.descends_to_torus():
            raise NonPeriodicInput("Coefficient has polynomial dependence on a periodic angle", detail=key)

    beta = lemma33_primitive(om)
    zeros = (0,) * chart.dim
    drift: Dict = {}
    for (l, j, m), g in _angle_action_components(om).items():
        if not chart.is_periodic(j):
            continue
        for angle in range(chart.n):
            if not chart.is_periodic(angle):
                g = g.set_angle_zero(angle)
        for angle in range(chart.k):
            g = g.torus_average(angle)
        term = g * CoeffFn.angle(chart, j)
        key = (l, zeros, (m,))
        drift[key] = drift[key] + term if key in drift else term
    drift_form = WeylSection(chart, om.caps, drift)
    gamma = beta - drift_form
    normalized = om - exterior_d(gamma)
    return normalized, gamma


def normalize_curvature(om: FormOnChart, symplectic: SymplecticData) -> Tuple[FormOnChart, FormOnChart]:
    """ℏ 次数付きの Ω = ω + Σ ℏ^l Ω_l の補正部分のみを正規化

    Returns:
        (Ω', γ)。Ω' = ω + Σ ℏ^l Ω'_l, Ω − Ω' = dγ。
    """
    omega = symplectic.form(om.caps)
    correction = om - omega
    if any(l == 0 for (l, _, _), _ in correction.items()):
        raise NotDeformationOfOmega("Curvature form differs from omega at order hbar^0")
    normalized, gamma = prop32_normalize(correction) if correction else (correction, correction)
    return omega + normalized, gamma
