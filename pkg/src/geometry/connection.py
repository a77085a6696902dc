"""シンプレクティック捩れなし接続と曲率

Darbouxチャート上では、シンプレクティックかつ捩れなしであることは
下付きクリストッフェル記号 Γ_{xyz} の完全対称性と同値。
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, SymplecticData, WeylSection, exterior_d, hbar_bracket
from src.errors import ChartMismatch, InputError, NotSymmetric
from src.utils.reports import VerificationReport


logger = logging.getLogger(__name__)

Index3 = Tuple[int, int, int]


class ConnectionData:
    """下付きクリストッフェル記号 Γ_{xyz} と上付き記号 Γ^z_{xy} = ω^{zw}Γ_{wxy}"""

    def __init__(self, chart: ChartSpec, symplectic: SymplecticData, components: Mapping[Index3, CoeffFn]):
        """
        Args:
            chart: チャート
            symplectic: シンプレクティックデータ
            components: 順序つき添字 (x, y, z) から係数への写像（対称化はしない）
        """
        if symplectic.chart != chart:
            raise ChartMismatch("Symplectic data lives on another chart")
        self.chart = chart
        self.symplectic = symplectic
        self._lowered: Dict[Index3, CoeffFn] = {}
        for (x, y, z), coeff in components.items():
            if not all(0 <= i < chart.dim for i in (x, y, z)):
                raise InputError(f"Christoffel index out of range: {(x, y, z)}")
            if coeff:
                self._lowered[(x, y, z)] = coeff
        self._raised: Dict[Index3, CoeffFn] = {}

    @classmethod
    def zero(cls, chart: ChartSpec, symplectic: SymplecticData) -> "ConnectionData":
        return cls(chart, symplectic, {})

    @classmethod
    def from_entries(
        cls,
        chart: ChartSpec,
        symplectic: SymplecticData,
        entries: Iterable[Tuple[Index3, CoeffFn]],
    ) -> "ConnectionData":
        """添字の並べ替え全てに値を展開して対称テンソルを作る

        同じ添字集合に異なる値が与えられた場合は NotSymmetric。
        """
        components: Dict[Index3, CoeffFn] = {}
        for indices, coeff in entries:
            for perm in set(itertools.permutations(indices)):
                if perm in components and components[perm] != coeff:
                    raise NotSymmetric(f"Conflicting values for Gamma{list(indices)}", detail=perm)
                components[perm] = coeff
        return cls(chart, symplectic, components)

    def symbol(self, x: int, y: int, z: int) -> CoeffFn:
        return self._lowered.get((x, y, z), CoeffFn.zero(self.chart))

    def raised(self, z: int, x: int, y: int) -> CoeffFn:
        """Γ^z_{xy}"""
        key = (z, x, y)
        if key not in self._raised:
            total = CoeffFn.zero(self.chart)
            for w in range(self.chart.dim):
                omega = self.symplectic.raised[z][w]
                if omega:
                    total = total + omega * self.symbol(w, x, y)
            self._raised[key] = total
        return self._raised[key]

    def components(self) -> List[Tuple[Index3, CoeffFn]]:
        return sorted(self._lowered.items(), key=lambda item: item[0])

    def independent_components(self) -> List[Tuple[Index3, CoeffFn]]:
        """x ≤ y ≤ z の成分のみ"""
        return [(key, c) for key, c in self.components() if key[0] <= key[1] <= key[2]]

    @property
    def is_zero(self) -> bool:
        return not self._lowered

    def form(self, caps: Caps) -> WeylSection:
        """接続形式 Γ = ½ Γ_{jkl} y^j y^k dx^l"""
        terms: Dict = {}
        for (j, k, l), coeff in self._lowered.items():
            a = [0] * self.chart.dim
            a[j] += 1
            a[k] += 1
            key = (0, tuple(a), (l,))
            term = coeff.scale(Fraction(1, 2))
            terms[key] = terms[key] + term if key in terms else term
        return WeylSection(self.chart, caps, terms)

    def to_records(self) -> List[Dict[str, object]]:
        return [{"indices": list(key), "coeff": c.to_records()} for key, c in self.independent_components()]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConnectionData):
            return NotImplemented
        return self.chart == other.chart and self.symplectic == other.symplectic and self._lowered == other._lowered

    def __hash__(self) -> int:
        return hash((self.chart, frozenset(self._lowered.items())))


@dataclass
class CurvatureData:
    """曲率テンソル R_{ijkl} と R = ¼ R_{ijkl} y^i y^j dx^k ∧ dx^l"""

    tensor: Dict[Tuple[int, int, int, int], CoeffFn]
    form: WeylSection

    def component(self, i: int, j: int, k: int, l: int) -> CoeffFn:
        return self.tensor.get((i, j, k, l), CoeffFn.zero(self.form.chart))

    @property
    def is_flat(self) -> bool:
        return not self.tensor


def validate_connection(c: ConnectionData, s: SymplecticData) -> VerificationReport:
    """接続の完全対称性とωの定数性を検証

    Raises:
        NotSymmetric: Γ_{xyz} が完全対称でない
    """
    if c.symplectic != s:
        raise ChartMismatch("Connection was built for different symplectic data")
    report = VerificationReport("validate-connection")
    for key, coeff in c.components():
        for perm in set(itertools.permutations(key)):
            if c.symbol(*perm) != coeff:
                raise NotSymmetric(f"Gamma{list(key)} != Gamma{list(perm)}", detail=(key, perm))
    report.add("fully_symmetric", [])
    report.add("constant_omega", [] if s.is_constant else ["omega has non-constant coefficients"])
    return report


def _constraint_name(c: ConnectionData, key: Index3) -> str:
    angles = sum(1 for i in key if c.chart.is_angle(i))
    return ("Gamma_III_linear_in_angles", "Gamma_IIphi_angle_free", "Gamma_Iphiphi_vanishes", "Gamma_phiphiphi_vanishes")[angles]


def check_theorem21(c: ConnectionData, chart: Optional[ChartSpec] = None) -> VerificationReport:
    """ファイバー適合接続の条件を下付き記号上で検証

    - Γ_{φφφ} = 0
    - Γ_{Iφφ} = 0
    - Γ_{IIφ} は角変数に依存しない
    - Γ_{III} は角変数について1次以下（フーリエ項なし）
    """
    chart = chart or c.chart
    if chart != c.chart:
        raise ChartMismatch("Connection lives on another chart")
    residuals: Dict[str, List[str]] = {
        "Gamma_phiphiphi_vanishes": [],
        "Gamma_Iphiphi_vanishes": [],
        "Gamma_IIphi_angle_free": [],
        "Gamma_III_linear_in_angles": [],
    }
    names = chart.coordinate_names
    for key, coeff in c.independent_components():
        name = _constraint_name(c, key)
        label = "Gamma_{" + ",".join(names[i] for i in key) + "} = " + coeff.to_text()
        if name in ("Gamma_phiphiphi_vanishes", "Gamma_Iphiphi_vanishes"):
            residuals[name].append(label)
        elif name == "Gamma_IIphi_angle_free":
            if not coeff.is_action_only():
                residuals[name].append(label)
        elif not coeff.is_fourier_free() or coeff.angle_degree() > 1:
            residuals[name].append(label)
    report = VerificationReport("fiber-adapted-constraints")
    for name, items in residuals.items():
        report.add(name, items)
    return report


@dataclass(frozen=True)
class SamplerBounds:
    """ランダム接続の生成範囲"""

    max_action_degree: int = 1
    coefficient_bound: int = 2
    max_denominator: int = 2
    angle_terms: bool = True
    density: float = 0.7


def _random_rational(rng: np.random.Generator, bounds: SamplerBounds) -> Fraction:
    if bounds.coefficient_bound <= 0 or rng.random() > bounds.density:
        return Fraction(0)
    numerator = int(rng.integers(-bounds.coefficient_bound, bounds.coefficient_bound + 1))
    denominator = int(rng.integers(1, max(bounds.max_denominator, 1) + 1))
    return Fraction(numerator, denominator)


def _random_action_polynomial(chart: ChartSpec, rng: np.random.Generator, bounds: SamplerBounds) -> CoeffFn:
    total = CoeffFn.zero(chart)
    for alpha in itertools.product(range(bounds.max_action_degree + 1), repeat=chart.n):
        if sum(alpha) > bounds.max_action_degree:
            continue
        value = _random_rational(rng, bounds)
        if value:
            total = total + CoeffFn.monomial(chart, alpha=alpha, coeff=value)
    return total


def sample_theorem21_connection(
    chart: ChartSpec,
    symplectic: SymplecticData,
    seed: int,
    bounds: Optional[SamplerBounds] = None,
) -> ConnectionData:
    """ファイバー適合条件を満たすランダムな対称接続を生成

    Γ_{φφφ} = Γ_{Iφφ} = 0、Γ_{IIφ} = Γ_{IIφ}(I)、Γ_{III} = A(I) + Σ_j B_j(I) φ^j。
    同じ seed からは同じテンソルが得られる。
    """
    bounds = bounds or SamplerBounds()
    rng = np.random.default_rng(seed)
    entries: List[Tuple[Index3, CoeffFn]] = []
    for key in itertools.combinations_with_replacement(range(chart.dim), 3):
        angles = sum(1 for i in key if chart.is_angle(i))
        if angles >= 2:
            continue
        coeff = _random_action_polynomial(chart, rng, bounds)
        if angles == 0 and bounds.angle_terms:
            for j in range(chart.n):
                coeff = coeff + _random_action_polynomial(chart, rng, bounds) * CoeffFn.angle(chart, j)
        if coeff:
            entries.append((key, coeff))
    logger.debug(f"Sampled connection with {len(entries)} independent components (seed={seed})")
    return ConnectionData.from_entries(chart, symplectic, entries)


def covariant_derivative(a: WeylSection, c: ConnectionData, s: SymplecticData) -> WeylSection:
    """∂a = da + (1/ℏ)[Γ, a]"""
    if c.chart != a.chart:
        raise ChartMismatch("Connection lives on another chart")
    result = exterior_d(a)
    if not c.is_zero:
        result = result + hbar_bracket(c.form(a.caps), a, s)
    return result


def curvature(c: ConnectionData, s: SymplecticData, caps: Optional[Caps] = None) -> CurvatureData:
    """曲率 R_{ijkl} = ω_{im} R^m_{jkl}

    R^m_{jkl} = ∂_kΓ^m_{jl} − ∂_lΓ^m_{jk} + Γ^m_{ks}Γ^s_{jl} − Γ^m_{ls}Γ^s_{jk}
    """
    chart = c.chart
    dim = chart.dim
    caps = caps or Caps(2, 0)
    mixed: Dict[Tuple[int, int, int, int], CoeffFn] = {}
    if not c.is_zero:
        for m, j, k, l in itertools.product(range(dim), repeat=4):
            if k >= l:
                continue
            value = c.raised(m, j, l).diff(k) - c.raised(m, j, k).diff(l)
            for t in range(dim):
                value = value + c.raised(m, k, t) * c.raised(t, j, l) - c.raised(m, l, t) * c.raised(t, j, k)
            if value:
                mixed[(m, j, k, l)] = value
                mixed[(m, j, l, k)] = -value
    tensor: Dict[Tuple[int, int, int, int], CoeffFn] = {}
    for i, j, k, l in itertools.product(range(dim), repeat=4):
        value = CoeffFn.zero(chart)
        for m in range(dim):
            if s.lowered[i][m] and (m, j, k, l) in mixed:
                value = value + s.lowered[i][m] * mixed[(m, j, k, l)]
        if value:
            tensor[(i, j, k, l)] = value

    terms: Dict = {}
    for (i, j, k, l), value in tensor.items():
        if k >= l:
            continue
        a = [0] * dim
        a[i] += 1
        a[j] += 1
        key = (0, tuple(a), (k, l))
        # (k, l) と (l, k) の2項を合わせて ½
        term = value.scale(Fraction(1, 2))
        terms[key] = terms[key] + term if key in terms else term
    return CurvatureData(tensor=tensor, form=WeylSection(chart, caps, terms))


def curvature_from_connection_form(c: ConnectionData, s: SymplecticData, caps: Optional[Caps] = None) -> WeylSection:
    """dΓ + (1/ℏ) Γ∘Γ（1形式 Γ では Γ∘Γ = ½[Γ, Γ]）"""
    caps = caps or Caps(2, 0)
    gamma = c.form(caps)
    return exterior_d(gamma) + hbar_bracket(gamma, gamma, s).scale(Fraction(1, 2))
