"""打ち切りWeyl代数（微分形式つき）

切断は ℏ^l · y^a · dx^g · f(x) の項の和で表す。y と dx のスロット番号は
チャートの座標スロットと共通で、0..n-1 が作用方向 (J, dI)、n..2n-1 が
角方向 (ψ, dφ)。
"""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from src.algebra.coeff_ring import ChartSpec, CoeffFn, GaussianRational, Scalar
from src.errors import CapMismatch, ChartMismatch, FourierInFiltration, InputError, NotDivisible, ParseError


WeylKey = Tuple[int, Tuple[int, ...], Tuple[int, ...]]


@dataclass(frozen=True)
class Caps:
    """打ち切り次数: Weyl次数 |a| + 2l ≤ degree, ℏ 冪 l ≤ order"""

    degree: int
    order: int

    def __post_init__(self):
        if self.degree < 0 or self.order < 0:
            raise InputError(f"Caps must be non-negative: {self}")

    @classmethod
    def for_order(cls, order: int, degree: Optional[int] = None) -> "Caps":
        return cls(2 * order if degree is None else degree, order)

    def widened(self, degree: int = 2, order: int = 1) -> "Caps":
        return Caps(self.degree + degree, self.order + order)

    def admits(self, l: int, a: Sequence[int]) -> bool:
        return l <= self.order and sum(a) + 2 * l <= self.degree

    def to_record(self) -> Dict[str, int]:
        return {"degree": self.degree, "order": self.order}


class SymplecticData:
    """シンプレクティック行列 ω_{jl} とその逆行列 ω^{jl}

    ω^{js} ω_{sl} = δ^j_l。検証は src.geometry.symplectic.validate_symplectic が行う。
    """

    def __init__(
        self,
        chart: ChartSpec,
        lowered: Sequence[Sequence[CoeffFn]],
        raised: Sequence[Sequence[CoeffFn]],
    ):
        self.chart = chart
        self.lowered = tuple(tuple(row) for row in lowered)
        self.raised = tuple(tuple(row) for row in raised)
        dim = chart.dim
        self.pairs: Tuple[Tuple[int, int], ...] = tuple(
            (j, l) for j in range(dim) for l in range(dim) if self.raised[j][l]
        )
        constants = {pair: self.raised[pair[0]][pair[1]].constant_value() for pair in self.pairs}
        self.constant_raised: Optional[Dict[Tuple[int, int], GaussianRational]] = (
            constants if all(v is not None for v in constants.values()) else None
        )

    @classmethod
    def standard(cls, chart: ChartSpec) -> "SymplecticData":
        """標準形 ω = Σ dI^α ∧ dφ^α"""
        zero = CoeffFn.zero(chart)
        one = CoeffFn.constant(chart, 1)
        dim, n = chart.dim, chart.n
        lowered = [[zero] * dim for _ in range(dim)]
        raised = [[zero] * dim for _ in range(dim)]
        for alpha in range(n):
            lowered[alpha][n + alpha] = one
            lowered[n + alpha][alpha] = -one
            raised[alpha][n + alpha] = -one
            raised[n + alpha][alpha] = one
        return cls(chart, lowered, raised)

    @property
    def is_constant(self) -> bool:
        return all(f.constant_value() is not None for row in self.lowered for f in row)

    def form(self, caps: Caps) -> "WeylSection":
        """ω = Σ_{j<l} ω_{jl} dx^j ∧ dx^l を切断として返す"""
        terms: Dict[WeylKey, CoeffFn] = {}
        zeros = (0,) * self.chart.dim
        for j in range(self.chart.dim):
            for l in range(j + 1, self.chart.dim):
                if self.lowered[j][l]:
                    terms[(0, zeros, (j, l))] = self.lowered[j][l]
        return WeylSection(self.chart, caps, terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymplecticData):
            return NotImplemented
        return self.chart == other.chart and self.lowered == other.lowered

    def __hash__(self) -> int:
        return hash((self.chart, self.lowered))

    def to_records(self) -> List[Dict[str, object]]:
        """上三角成分のみを直列化"""
        records = []
        for j in range(self.chart.dim):
            for l in range(j + 1, self.chart.dim):
                if self.lowered[j][l]:
                    records.append({"indices": [j, l], "coeff": self.lowered[j][l].to_records()})
        return records


def weyl_degree(l: int, a: Sequence[int]) -> int:
    """Weyl次数 |a| + 2l（deg y = 1, deg ℏ = 2）"""
    return sum(a) + 2 * l


def _insert(j: int, g: Tuple[int, ...]) -> Optional[Tuple[int, Tuple[int, ...]]]:
    """dx^j ∧ dx^g を正規順序に並べ替え、(符号, 添字列) を返す"""
    if j in g:
        return None
    before = sum(1 for x in g if x < j)
    sign = -1 if before % 2 else 1
    return sign, tuple(sorted(g + (j,)))


def _wedge(g1: Tuple[int, ...], g2: Tuple[int, ...]) -> Optional[Tuple[int, Tuple[int, ...]]]:
    """dx^{g1} ∧ dx^{g2} の (符号, 添字列)"""
    if set(g1) & set(g2):
        return None
    inversions = sum(1 for x in g1 for y in g2 if x > y)
    return (-1 if inversions % 2 else 1), tuple(sorted(g1 + g2))


class WeylSection:
    """打ち切りWeyl代数の元

    項キー (l, a, g) から CoeffFn への写像。caps を超える項は構築時に捨てる。
    """

    __slots__ = ("chart", "caps", "_terms")

    def __init__(self, chart: ChartSpec, caps: Caps, terms: Optional[Mapping[WeylKey, CoeffFn]] = None):
        self.chart = chart
        self.caps = caps
        cleaned: Dict[WeylKey, CoeffFn] = {}
        for (l, a, g), coeff in (terms or {}).items():
            a, g = tuple(a), tuple(g)
            if len(a) != chart.dim or any(x < 0 for x in a) or l < 0:
                raise InputError(f"Invalid Weyl term key {(l, a, g)}")
            if any(x >= y for x, y in zip(g, g[1:])) or any(not 0 <= x < chart.dim for x in g):
                raise InputError(f"Form indices must be strictly increasing slots: {g}")
            if coeff.chart != chart:
                raise ChartMismatch(f"Coefficient chart {coeff.chart} differs from {chart}")
            if coeff and caps.admits(l, a):
                cleaned[(l, a, g)] = coeff
        self._terms = cleaned

    # ---- 生成 ----

    @classmethod
    def zero(cls, chart: ChartSpec, caps: Caps) -> "WeylSection":
        return cls(chart, caps)

    @classmethod
    def monomial(
        cls,
        chart: ChartSpec,
        caps: Caps,
        l: int = 0,
        a: Iterable[int] = (),
        g: Iterable[int] = (),
        coeff: Union[CoeffFn, Scalar] = 1,
    ) -> "WeylSection":
        """ℏ^l y^a dx^g · coeff。g は任意順序で与えてよく、符号は正規化される"""
        a = tuple(a) or (0,) * chart.dim
        if not isinstance(coeff, CoeffFn):
            coeff = CoeffFn.constant(chart, coeff)
        g = tuple(g)
        if len(set(g)) != len(g):
            return cls.zero(chart, caps)
        inversions = sum(1 for i, x in enumerate(g) for y in g[i + 1:] if x > y)
        sign = -1 if inversions % 2 else 1
        return cls(chart, caps, {(l, a, tuple(sorted(g))): coeff.scale(sign)})

    @classmethod
    def scalar(cls, chart: ChartSpec, caps: Caps, f: Union[CoeffFn, Scalar], l: int = 0) -> "WeylSection":
        return cls.monomial(chart, caps, l=l, coeff=f)

    @classmethod
    def fiber(cls, chart: ChartSpec, caps: Caps, j: int) -> "WeylSection":
        """生成元 y^j"""
        a = [0] * chart.dim
        a[j] = 1
        return cls.monomial(chart, caps, a=a)

    # ---- 基本情報 ----

    def terms(self) -> List[Tuple[WeylKey, CoeffFn]]:
        return sorted(self._terms.items(), key=lambda item: item[0])

    def items(self) -> Iterable[Tuple[WeylKey, CoeffFn]]:
        return self._terms.items()

    def coefficient(self, l: int, a: Iterable[int], g: Iterable[int] = ()) -> CoeffFn:
        return self._terms.get((l, tuple(a), tuple(g)), CoeffFn.zero(self.chart))

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeylSection):
            return NotImplemented
        return self.chart == other.chart and self.caps == other.caps and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.chart, self.caps, frozenset(self._terms.items())))

    def min_degree(self) -> int:
        """最小Weyl次数（ゼロ切断は caps.degree + 1）"""
        return min((weyl_degree(l, a) for (l, a, _) in self._terms), default=self.caps.degree + 1)

    def max_degree(self) -> int:
        return max((weyl_degree(l, a) for (l, a, _) in self._terms), default=-1)

    def form_degrees(self) -> set:
        return {len(g) for (_, _, g) in self._terms}

    def is_form(self) -> bool:
        """ファイバー変数を含まない（純粋な微分形式）"""
        return all(not any(a) for (_, a, _) in self._terms)

    # ---- 線形演算 ----

    def _check(self, other: "WeylSection") -> None:
        if self.chart != other.chart:
            raise ChartMismatch(f"Chart mismatch: {self.chart} vs {other.chart}")
        if self.caps != other.caps:
            raise CapMismatch(f"Caps mismatch: {self.caps} vs {other.caps}")

    def __add__(self, other: "WeylSection") -> "WeylSection":
        self._check(other)
        terms = dict(self._terms)
        for key, coeff in other._terms.items():
            terms[key] = terms[key] + coeff if key in terms else coeff
        return WeylSection(self.chart, self.caps, terms)

    def __neg__(self) -> "WeylSection":
        return WeylSection(self.chart, self.caps, {key: -c for key, c in self._terms.items()})

    def __sub__(self, other: "WeylSection") -> "WeylSection":
        return self + (-other)

    def scale(self, value: Union[CoeffFn, Scalar]) -> "WeylSection":
        """係数関数またはスカラーとの積"""
        if isinstance(value, CoeffFn):
            return WeylSection(self.chart, self.caps, {key: c * value for key, c in self._terms.items()})
        return WeylSection(self.chart, self.caps, {key: c.scale(value) for key, c in self._terms.items()})

    def times_hbar(self, power: int = 1) -> "WeylSection":
        return WeylSection(self.chart, self.caps, {(l + power, a, g): c for (l, a, g), c in self._terms.items()})

    def recapped(self, caps: Caps) -> "WeylSection":
        """打ち切り次数を付け替える（超過分は捨てる）"""
        return WeylSection(self.chart, caps, self._terms)

    def filtered(self, predicate: Callable[[int, Tuple[int, ...], Tuple[int, ...]], bool]) -> "WeylSection":
        return WeylSection(self.chart, self.caps, {k: c for k, c in self._terms.items() if predicate(*k)})

    def up_to_degree(self, degree: int) -> "WeylSection":
        return self.filtered(lambda l, a, g: weyl_degree(l, a) <= degree)

    def homogeneous(self, degree: int) -> "WeylSection":
        return self.filtered(lambda l, a, g: weyl_degree(l, a) == degree)

    def map_coefficients(self, func: Callable[[CoeffFn], CoeffFn]) -> "WeylSection":
        return WeylSection(self.chart, self.caps, {k: func(c) for k, c in self._terms.items()})

    def constant_part(self) -> Dict[int, CoeffFn]:
        """y 次数0かつ形式次数0の部分を ℏ 冪ごとに返す"""
        zeros = (0,) * self.chart.dim
        return {l: c for (l, a, g), c in self._terms.items() if a == zeros and not g}

    # ---- 直列化 ----

    def to_records(self) -> List[Dict[str, object]]:
        return [
            {"l": l, "a": list(a), "g": list(g), "coeff": c.to_records()}
            for (l, a, g), c in self.terms()
        ]

    @classmethod
    def from_records(cls, chart: ChartSpec, caps: Caps, records: Iterable[Mapping[str, object]]) -> "WeylSection":
        terms: Dict[WeylKey, CoeffFn] = {}
        for record in records:
            try:
                key = (int(record["l"]), tuple(int(x) for x in record["a"]), tuple(int(x) for x in record["g"]))
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"Malformed section record: {record!r}") from e
            coeff = CoeffFn.from_records(chart, record.get("coeff", []))
            terms[key] = terms[key] + coeff if key in terms else coeff
        return cls(chart, caps, terms)

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        fibers = self.chart.fiber_names
        coords = self.chart.coordinate_names
        parts = []
        for (l, a, g), c in self.terms():
            factors = []
            if l:
                factors.append("hbar" if l == 1 else f"hbar^{l}")
            for j, e in enumerate(a):
                if e:
                    factors.append(fibers[j] if e == 1 else f"{fibers[j]}^{e}")
            if g:
                factors.append("^".join(f"d{coords[j]}" for j in g))
            parts.append(f"({c.to_text()})" + ("*" + "*".join(factors) if factors else ""))
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"WeylSection({self.to_text()})"


# ---- 縮約による双線形演算 ----


def _falling(n: int, d: int) -> int:
    result = 1
    for t in range(d):
        result *= n - t
    return result


@lru_cache(maxsize=None)
def _contraction_patterns(
    a1: Tuple[int, ...], a2: Tuple[int, ...], pairs: Tuple[Tuple[int, int], ...]
) -> Tuple[Tuple[int, Tuple[int, ...], Tuple[int, ...], Fraction], ...]:
    """y^{a1} と y^{a2} の縮約パターン (r, μ, 残る単項式, 係数) を列挙

    μ_p は pairs[p] = (j, l) の縮約回数で、係数は
    Π ff(a1_j, d_j) ff(a2_l, e_l) / Π μ_p!。
    """
    out = []
    left, right, mu = list(a1), list(a2), []

    def walk(p: int) -> None:
        if p == len(pairs):
            factor = Fraction(1)
            for j, x in enumerate(a1):
                factor *= _falling(x, x - left[j])
            for j, x in enumerate(a2):
                factor *= _falling(x, x - right[j])
            for count in mu:
                for t in range(2, count + 1):
                    factor /= t
            mono = tuple(x + y for x, y in zip(left, right))
            out.append((sum(mu), tuple(mu), mono, factor))
            return
        j, l = pairs[p]
        for count in range(min(left[j], right[l]) + 1):
            left[j] -= count
            right[l] -= count
            mu.append(count)
            walk(p + 1)
            mu.pop()
            left[j] += count
            right[l] += count

    walk(0)
    return tuple(out)


def _omega_weight(
    s: SymplecticData, mu: Tuple[int, ...], cache: Dict[Tuple[int, ...], object]
) -> Union[GaussianRational, CoeffFn]:
    """Π_p (ω^{pairs[p]})^{μ_p}"""
    if mu in cache:
        return cache[mu]
    if s.constant_raised is not None:
        value: Union[GaussianRational, CoeffFn] = GaussianRational(Fraction(1))
        for pair, count in zip(s.pairs, mu):
            value = value * (s.constant_raised[pair] ** count)
    else:
        value = CoeffFn.constant(s.chart, 1)
        for (j, l), count in zip(s.pairs, mu):
            if count:
                value = value * (s.raised[j][l] ** count)
    cache[mu] = value
    return value


def _bilinear(
    a: WeylSection,
    b: WeylSection,
    s: SymplecticData,
    weight: Callable[[int], Optional[Fraction]],
    hbar_step: int,
    full_contraction: bool = False,
) -> WeylSection:
    """Σ_r weight(r) ℏ^{hbar_step·r} (1/r!)(ω^{jl}∂_j⊗∂_l)^r 型の双線形演算

    形式部分は (A dx^I)(B dx^J) = (AB) dx^I ∧ dx^J の規則で結合する。
    """
    a._check(b)
    if s.chart != a.chart:
        raise ChartMismatch("Symplectic data lives on another chart")
    caps = a.caps
    pairs = s.pairs
    cache: Dict[Tuple[int, ...], object] = {}
    out: Dict[WeylKey, CoeffFn] = {}
    b_terms = b.terms()
    for (l1, a1, g1), c1 in a.terms():
        if full_contraction and g1:
            continue
        d1 = weyl_degree(l1, a1)
        for (l2, a2, g2), c2 in b_terms:
            if full_contraction and g2:
                continue
            if hbar_step and d1 + weyl_degree(l2, a2) > caps.degree:
                continue
            wedge = _wedge(g1, g2)
            if wedge is None:
                continue
            sign, g = wedge
            product = None
            for r, mu, mono, factor in _contraction_patterns(a1, a2, pairs):
                w = weight(r)
                if not w:
                    continue
                l = l1 + l2 + hbar_step * r
                if l > caps.order or sum(mono) + 2 * l > caps.degree:
                    continue
                if full_contraction and any(mono):
                    continue
                if product is None:
                    product = c1 * c2
                omega = _omega_weight(s, mu, cache)
                scalar = w * factor * sign
                if isinstance(omega, CoeffFn):
                    term = (product * omega).scale(scalar)
                else:
                    term = product.scale(omega * scalar)
                key = (l, mono, g)
                out[key] = out[key] + term if key in out else term
    return WeylSection(a.chart, caps, out)


def _moyal_weight(r: int) -> Fraction:
    return Fraction(1, 2 ** r)


def _odd_weight(r: int) -> Optional[Fraction]:
    return Fraction(2, 2 ** r) if r % 2 else None


def moyal(a: WeylSection, b: WeylSection, s: SymplecticData) -> WeylSection:
    """Moyal–Weyl 積 a ∘ b（caps で打ち切り）"""
    return _bilinear(a, b, s, _moyal_weight, hbar_step=1)


def supercommutator(a: WeylSection, b: WeylSection, s: SymplecticData) -> WeylSection:
    """超交換子 [a, b] = a∘b − (−1)^{|a||b|} b∘a

    係数の入れ替えで偶数次の縮約は打ち消し合い、奇数次のみ2倍で残る。
    """
    return _bilinear(a, b, s, _odd_weight, hbar_step=1)


def commutative_product(a: WeylSection, b: WeylSection, s: SymplecticData) -> WeylSection:
    """ファイバー方向の可換積（縮約なしの部分）"""
    return _bilinear(a, b, s, lambda r: Fraction(1) if r == 0 else None, hbar_step=0)


def fiber_poisson(a: WeylSection, b: WeylSection, s: SymplecticData) -> WeylSection:
    """ファイバー方向のPoisson括弧 ω^{jl} ∂a/∂y^j ∂b/∂y^l"""
    return _bilinear(a, b, s, lambda r: Fraction(1) if r == 1 else None, hbar_step=0)


def moyal_constant_part(a: WeylSection, b: WeylSection, s: SymplecticData) -> Dict[int, CoeffFn]:
    """(a ∘ b)_0 のみを完全縮約で計算し、ℏ 冪ごとに返す"""
    return _bilinear(a, b, s, _moyal_weight, hbar_step=1, full_contraction=True).constant_part()


def hdiv(a: WeylSection) -> WeylSection:
    """ℏ で割る"""
    terms: Dict[WeylKey, CoeffFn] = {}
    for (l, a_, g), c in a.items():
        if l < 1:
            raise NotDivisible("Term is not divisible by hbar", detail={"l": l, "a": list(a_), "g": list(g)})
        terms[(l - 1, a_, g)] = c
    return WeylSection(a.chart, a.caps, terms)


def hbar_bracket(x: WeylSection, a: WeylSection, s: SymplecticData) -> WeylSection:
    """(1/ℏ)[x, a] を a.caps まで計算

    交換子は caps を (2, 1) 広げて計算してから ℏ で割り、元の caps に戻す。
    """
    x._check(a)
    wide = a.caps.widened()
    return hdiv(supercommutator(x.recapped(wide), a.recapped(wide), s)).recapped(a.caps)


# ---- δ, δ⁻¹, d ----


def delta(a: WeylSection) -> WeylSection:
    """δa = Σ_j dx^j ∧ ∂a/∂y^j"""
    out: Dict[WeylKey, CoeffFn] = {}
    for (l, mono, g), c in a.items():
        for j, e in enumerate(mono):
            if not e:
                continue
            placed = _insert(j, g)
            if placed is None:
                continue
            sign, new_g = placed
            new_a = mono[:j] + (e - 1,) + mono[j + 1:]
            key = (l, new_a, new_g)
            term = c.scale(sign * e)
            out[key] = out[key] + term if key in out else term
    return WeylSection(a.chart, a.caps, out)


def delta_inv(a: WeylSection) -> WeylSection:
    """δ⁻¹a = (1/(p+q)) Σ_j y^j ι_{∂_j} a（p は ℏ を除く y 次数、q は形式次数）"""
    out: Dict[WeylKey, CoeffFn] = {}
    for (l, mono, g), c in a.items():
        p, q = sum(mono), len(g)
        if p + q == 0:
            continue
        for t, j in enumerate(g):
            new_g = g[:t] + g[t + 1:]
            new_a = mono[:j] + (mono[j] + 1,) + mono[j + 1:]
            key = (l, new_a, new_g)
            term = c.scale(Fraction(-1 if t % 2 else 1, p + q))
            out[key] = out[key] + term if key in out else term
    return WeylSection(a.chart, a.caps, out)


def exterior_d(a: WeylSection) -> WeylSection:
    """係数ごとの外微分 d"""
    out: Dict[WeylKey, CoeffFn] = {}
    for (l, mono, g), c in a.items():
        for v in range(a.chart.dim):
            dc = c.diff(v)
            if not dc:
                continue
            placed = _insert(v, g)
            if placed is None:
                continue
            sign, new_g = placed
            key = (l, mono, new_g)
            term = dc.scale(sign)
            out[key] = out[key] + term if key in out else term
    return WeylSection(a.chart, a.caps, out)


# ---- 次数・フィルトレーション ----


def filtration_degree(a: WeylSection) -> int:
    """角変数の多項式次数 + ψ の個数 + dφ の個数 の最大値（ゼロ切断は -1）"""
    n = a.chart.n
    best = -1
    for (l, mono, g), c in a.items():
        if not c.is_fourier_free():
            raise FourierInFiltration("Filtration degree is defined only for Fourier-free sections", detail=(l, mono, g))
        psi = sum(mono[n:])
        dphi = sum(1 for j in g if j >= n)
        best = max(best, c.angle_degree() + psi + dphi)
    return best


def in_base_sector(a: WeylSection) -> bool:
    """作用変数のみの係数、J のみのファイバー変数、dI のみの形式からなるか"""
    n = a.chart.n
    return all(
        c.is_action_only() and not any(mono[n:]) and all(j < n for j in g)
        for (_, mono, g), c in a.items()
    )
