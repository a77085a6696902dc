"""ℏ 形式冪級数と微分作用素の級数"""

from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from src.algebra.coeff_ring import ChartSpec, CoeffFn, Scalar
from src.errors import ChartMismatch, InputError


class HbarSeries:
    """Σ_{l ≤ order} ℏ^l f_l（係数は CoeffFn）"""

    __slots__ = ("chart", "order", "_coeffs")

    def __init__(self, chart: ChartSpec, order: int, coeffs: Optional[Mapping[int, CoeffFn]] = None):
        self.chart = chart
        self.order = order
        self._coeffs: Dict[int, CoeffFn] = {}
        for l, f in (coeffs or {}).items():
            if f.chart != chart:
                raise ChartMismatch("Series coefficient lives on another chart")
            if 0 <= l <= order and f:
                self._coeffs[l] = f

    @classmethod
    def of(cls, f: CoeffFn, order: int) -> "HbarSeries":
        return cls(f.chart, order, {0: f})

    def coefficient(self, l: int) -> CoeffFn:
        return self._coeffs.get(l, CoeffFn.zero(self.chart))

    def __getitem__(self, l: int) -> CoeffFn:
        return self.coefficient(l)

    def items(self) -> List[Tuple[int, CoeffFn]]:
        return sorted(self._coeffs.items())

    @property
    def is_zero(self) -> bool:
        return not self._coeffs

    def corrections(self) -> "HbarSeries":
        """ℏ^0 の項を除いた部分"""
        return HbarSeries(self.chart, self.order, {l: f for l, f in self._coeffs.items() if l >= 1})

    def _check(self, other: "HbarSeries") -> None:
        if self.chart != other.chart:
            raise ChartMismatch("Series live on different charts")

    def __add__(self, other: "HbarSeries") -> "HbarSeries":
        self._check(other)
        order = min(self.order, other.order)
        coeffs = {l: self.coefficient(l) + other.coefficient(l) for l in range(order + 1)}
        return HbarSeries(self.chart, order, coeffs)

    def __neg__(self) -> "HbarSeries":
        return HbarSeries(self.chart, self.order, {l: -f for l, f in self._coeffs.items()})

    def __sub__(self, other: "HbarSeries") -> "HbarSeries":
        return self + (-other)

    def scale(self, value: Scalar) -> "HbarSeries":
        return HbarSeries(self.chart, self.order, {l: f.scale(value) for l, f in self._coeffs.items()})

    def shifted(self, power: int) -> "HbarSeries":
        """ℏ^power 倍"""
        return HbarSeries(self.chart, self.order, {l + power: f for l, f in self._coeffs.items()})

    def truncated(self, order: int) -> "HbarSeries":
        return HbarSeries(self.chart, min(order, self.order), self._coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HbarSeries):
            return NotImplemented
        return self.chart == other.chart and self.order == other.order and self._coeffs == other._coeffs

    def __hash__(self) -> int:
        return hash((self.chart, self.order, frozenset(self._coeffs.items())))

    def to_records(self) -> Dict[str, object]:
        return {"order": self.order, "coefficients": {str(l): f.to_records() for l, f in self.items()}}

    def to_text(self) -> str:
        if not self._coeffs:
            return "0"
        parts = []
        for l, f in self.items():
            prefix = "" if l == 0 else ("hbar*" if l == 1 else f"hbar^{l}*")
            parts.append(f"{prefix}({f.to_text()})")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"HbarSeries({self.to_text()})"


MultiIndex = Tuple[int, ...]


class DifferentialOperator:
    """有限和 Σ c_μ(x) ∂^μ（μ ∈ ℕ^{2n}）"""

    def __init__(self, chart: ChartSpec, terms: Iterable[Tuple[Sequence[int], CoeffFn]] = ()):
        self.chart = chart
        self.terms: List[Tuple[MultiIndex, CoeffFn]] = []
        for mu, coeff in terms:
            mu = tuple(mu)
            if len(mu) != chart.dim or any(x < 0 for x in mu):
                raise InputError(f"Invalid multi-index {mu} for chart of dimension {chart.dim}")
            if coeff.chart != chart:
                raise ChartMismatch("Operator coefficient lives on another chart")
            if coeff:
                self.terms.append((mu, coeff))

    def __call__(self, f: CoeffFn) -> CoeffFn:
        total = CoeffFn.zero(self.chart)
        for mu, coeff in self.terms:
            g = f
            for slot, count in enumerate(mu):
                for _ in range(count):
                    g = g.diff(slot)
                if not g:
                    break
            if g:
                total = total + coeff * g
        return total

    def to_records(self) -> List[Dict[str, object]]:
        return [{"mu": list(mu), "coeff": c.to_records()} for mu, c in self.terms]


class OperatorSeries:
    """P = id + Σ_{l≥1} ℏ^l P_l"""

    def __init__(self, chart: ChartSpec, operators: Optional[Mapping[int, DifferentialOperator]] = None):
        self.chart = chart
        self.operators: Dict[int, DifferentialOperator] = {}
        for l, op in (operators or {}).items():
            if l < 1:
                raise InputError("Operator series corrections start at hbar^1")
            self.operators[l] = op

    @classmethod
    def identity(cls, chart: ChartSpec) -> "OperatorSeries":
        return cls(chart)

    def apply(self, f: CoeffFn, order: int) -> HbarSeries:
        """P f を ℏ^order まで"""
        coeffs = {0: f}
        for l, op in self.operators.items():
            if l <= order:
                coeffs[l] = op(f)
        return HbarSeries(self.chart, order, coeffs)

    def apply_series(self, series: HbarSeries) -> HbarSeries:
        """P(Σ ℏ^l a_l)"""
        order = series.order
        coeffs: Dict[int, CoeffFn] = {}
        for l, a in series.items():
            coeffs[l] = coeffs.get(l, CoeffFn.zero(self.chart)) + a
            for i, op in self.operators.items():
                if l + i <= order:
                    coeffs[l + i] = coeffs.get(l + i, CoeffFn.zero(self.chart)) + op(a)
        return HbarSeries(self.chart, order, coeffs)

    def inverse_apply(self, f: CoeffFn, order: int) -> HbarSeries:
        """P⁻¹ f を逐次的に求める: g_0 = f, g_l = −Σ_{i=1}^{l} P_i g_{l−i}"""
        coeffs: Dict[int, CoeffFn] = {0: f}
        for l in range(1, order + 1):
            total = CoeffFn.zero(self.chart)
            for i in range(1, l + 1):
                op = self.operators.get(i)
                if op is not None:
                    total = total + op(coeffs[l - i])
            coeffs[l] = -total
        return HbarSeries(self.chart, order, coeffs)

    def inverse_apply_series(self, series: HbarSeries) -> HbarSeries:
        total = HbarSeries(self.chart, series.order)
        for l, a in series.items():
            total = total + self.inverse_apply(a, series.order).shifted(l)
        return total

    def to_records(self) -> Dict[str, object]:
        return {str(l): op.to_records() for l, op in sorted(self.operators.items())}
