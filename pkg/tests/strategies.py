"""hypothesis 用の生成戦略"""

import itertools
from fractions import Fraction

from hypothesis import strategies as st

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, WeylSection


rationals = st.builds(Fraction, st.integers(-4, 4), st.integers(1, 3))


@st.composite
def coeff_fns(draw, chart: ChartSpec, max_terms: int = 3, max_power: int = 2, fourier: bool = True, angles: bool = True):
    """ランダムな係数関数（フーリエ項・角変数の有無を指定可能）"""
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        alpha = tuple(draw(st.integers(0, max_power)) for _ in range(chart.n))
        beta = tuple(draw(st.integers(0, max_power)) if angles else 0 for _ in range(chart.n))
        m = tuple(draw(st.integers(-1, 1)) if fourier else 0 for _ in range(chart.k))
        terms[(alpha, beta, m)] = draw(rationals)
    return CoeffFn(chart, terms)


@st.composite
def torus_fns(draw, chart: ChartSpec, max_terms: int = 3):
    """周期角について多項式依存しない係数関数"""
    f = draw(coeff_fns(chart, max_terms=max_terms))
    return CoeffFn(chart, {(a, tuple(0 if j < chart.k else x for j, x in enumerate(b)), m): c for (a, b, m), c in f.terms()})


def _monomials(dim: int, max_total: int):
    return [a for a in itertools.product(range(max_total + 1), repeat=dim) if sum(a) <= max_total]


def _form_indices(dim: int, degrees):
    return [g for q in degrees for g in itertools.combinations(range(dim), q)]


@st.composite
def sections(
    draw,
    chart: ChartSpec,
    caps: Caps,
    max_terms: int = 3,
    form_degrees=(0, 1, 2),
    fourier: bool = False,
    max_power: int = 1,
):
    """caps 内のランダムな切断"""
    keys = [
        (l, a)
        for l in range(caps.order + 1)
        for a in _monomials(chart.dim, caps.degree - 2 * l)
    ]
    forms = _form_indices(chart.dim, form_degrees)
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        l, a = draw(st.sampled_from(keys))
        g = draw(st.sampled_from(forms))
        terms[(l, a, g)] = draw(coeff_fns(chart, max_terms=2, max_power=max_power, fourier=fourier))
    return WeylSection(chart, caps, terms)

