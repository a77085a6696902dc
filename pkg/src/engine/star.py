"""関数上のスター積

Fedosov構成以外の実装（関数上の直接Moyal積、反対積、P 共役）をまとめる。
検証関数はいずれも StarProduct を受け取る。
"""

import itertools
from abc import ABC, abstractmethod
from fractions import Fraction
from math import factorial
from typing import Dict

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import SymplecticData
from src.engine.series import HbarSeries, OperatorSeries


class StarProduct(ABC):
    """ℏ^order までのスター積"""

    def __init__(self, symplectic: SymplecticData, order: int):
        self.symplectic = symplectic
        self.order = order

    @property
    def chart(self) -> ChartSpec:
        return self.symplectic.chart

    @abstractmethod
    def product(self, f: CoeffFn, g: CoeffFn) -> HbarSeries:
        """f ∗ g"""

    def series_product(self, a: HbarSeries, b: HbarSeries) -> HbarSeries:
        """ℏ について双線形に拡張した積"""
        order = min(self.order, a.order, b.order)
        total = HbarSeries(self.chart, order)
        for i, f in a.items():
            for j, g in b.items():
                if i + j <= order:
                    total = total + self.product(f, g).truncated(order).shifted(i + j)
        return total

    def commutator(self, f: CoeffFn, g: CoeffFn) -> HbarSeries:
        return self.product(f, g) - self.product(g, f)


class MoyalStar(StarProduct):
    """関数上の直接Moyal積 Σ_r (ℏ/2)^r / r! ω^{j₁l₁}···ω^{j_r l_r} ∂_{j₁..j_r}f ∂_{l₁..l_r}g

    縮約の順序付き列を全て数える素朴な実装で、Weyl代数側の実装とは独立。
    """

    def product(self, f: CoeffFn, g: CoeffFn) -> HbarSeries:
        coeffs: Dict[int, CoeffFn] = {}
        pairs = self.symplectic.pairs
        for r in range(self.order + 1):
            total = CoeffFn.zero(self.chart)
            for sequence in itertools.product(pairs, repeat=r):
                left, right = f, g
                weight = CoeffFn.constant(self.chart, 1)
                for j, l in sequence:
                    left = left.diff(j)
                    right = right.diff(l)
                    weight = weight * self.symplectic.raised[j][l]
                    if not left or not right:
                        break
                if left and right:
                    total = total + weight * left * right
            coeffs[r] = total.scale(Fraction(1, 2 ** r * factorial(r)))
        return HbarSeries(self.chart, self.order, coeffs)


class OppositeStar(StarProduct):
    """反対積 f ∗' g = g ∗ f"""

    def __init__(self, base: StarProduct):
        super().__init__(base.symplectic, base.order)
        self.base = base

    def product(self, f: CoeffFn, g: CoeffFn) -> HbarSeries:
        return self.base.product(g, f)


class ConjugatedStar(StarProduct):
    """P 共役 f ∗' g = P⁻¹(Pf ∗ Pg)"""

    def __init__(self, base: StarProduct, operator: OperatorSeries):
        super().__init__(base.symplectic, base.order)
        self.base = base
        self.operator = operator

    def product(self, f: CoeffFn, g: CoeffFn) -> HbarSeries:
        pf = self.operator.apply(f, self.order)
        pg = self.operator.apply(g, self.order)
        return self.operator.inverse_apply_series(self.base.series_product(pf, pg))
