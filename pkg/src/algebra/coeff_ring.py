"""作用・角変数チャート上の厳密係数関数

作用変数 I の多項式 × 角変数 φ の多項式 × 周期角のフーリエ和を
ガウス有理数係数で保持する。周期は 2π 固定。
"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from src.errors import ChartMismatch, InputError, NonPeriodicDependence, ParseError
from src.utils.serialization import format_rational, parse_rational


TermKey = Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]


@dataclass(frozen=True, order=True)
class GaussianRational:
    """ガウス有理数 re + i·im"""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def of(cls, value: "Scalar") -> "GaussianRational":
        """整数・有理数・文字列からガウス有理数を生成"""
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
            return cls(Fraction(value))
        if isinstance(value, str):
            return cls(parse_rational(value))
        raise InputError(f"Unsupported scalar: {value!r}")

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im)

    def __add__(self, other: "Scalar") -> "GaussianRational":
        other = GaussianRational.of(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other: "Scalar") -> "GaussianRational":
        return self + (-GaussianRational.of(other))

    def __rsub__(self, other: "Scalar") -> "GaussianRational":
        return GaussianRational.of(other) - self

    def __mul__(self, other: "Scalar") -> "GaussianRational":
        other = GaussianRational.of(other)
        return GaussianRational(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def inverse(self) -> "GaussianRational":
        norm = self.re * self.re + self.im * self.im
        if norm == 0:
            raise ZeroDivisionError("GaussianRational division by zero")
        return GaussianRational(self.re / norm, -self.im / norm)

    def __truediv__(self, other: "Scalar") -> "GaussianRational":
        return self * GaussianRational.of(other).inverse()

    def __pow__(self, exponent: int) -> "GaussianRational":
        result = GaussianRational(Fraction(1))
        base = self if exponent >= 0 else self.inverse()
        for _ in range(abs(exponent)):
            result = result * base
        return result

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def to_record(self) -> Dict[str, str]:
        return {"re": format_rational(self.re), "im": format_rational(self.im)}

    def __str__(self) -> str:
        if self.im == 0:
            return format_rational(self.re)
        if self.re == 0:
            return f"{format_rational(self.im)}i"
        return f"({format_rational(self.re)}{'+' if self.im > 0 else '-'}{format_rational(abs(self.im))}i)"


Scalar = Union[int, Fraction, str, GaussianRational]

ONE = GaussianRational(Fraction(1))
IMAG = GaussianRational(Fraction(0), Fraction(1))


@dataclass(frozen=True)
class ChartSpec:
    """作用・角変数チャート

    座標スロットは 0 始まりで、0..n-1 が I^1..I^n、n..2n-1 が φ^1..φ^n。
    φ^1..φ^k が周期 2π の周期角。
    """

    n: int
    k: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"Chart needs n >= 1, got n={self.n}")
        if not 0 <= self.k <= self.n:
            raise InputError(f"Chart needs 0 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def dim(self) -> int:
        return 2 * self.n

    def action_slot(self, alpha: int) -> int:
        return alpha

    def angle_slot(self, j: int) -> int:
        return self.n + j

    def is_action(self, slot: int) -> bool:
        return 0 <= slot < self.n

    def is_angle(self, slot: int) -> bool:
        return self.n <= slot < self.dim

    def is_periodic(self, angle: int) -> bool:
        return 0 <= angle < self.k

    @property
    def coordinate_names(self) -> Tuple[str, ...]:
        return tuple(f"I{i + 1}" for i in range(self.n)) + tuple(f"phi{i + 1}" for i in range(self.n))

    @property
    def fiber_names(self) -> Tuple[str, ...]:
        return tuple(f"J{i + 1}" for i in range(self.n)) + tuple(f"psi{i + 1}" for i in range(self.n))

    def coordinate_index(self, token: Union[int, str]) -> int:
        """座標名（"I1", "phi2"）または 1 始まりの番号をスロット番号に変換"""
        if isinstance(token, int) and not isinstance(token, bool):
            if not 1 <= token <= self.dim:
                raise InputError(f"Coordinate index out of range: {token}")
            return token - 1
        if isinstance(token, str):
            names = self.coordinate_names
            if token in names:
                return names.index(token)
            fibers = self.fiber_names
            if token in fibers:
                return fibers.index(token)
        raise InputError(f"Unknown coordinate: {token!r}")

    def to_record(self) -> Dict[str, int]:
        return {"n": self.n, "k": self.k}


def _add_tuples(a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


def _replace(t: Tuple[int, ...], index: int, value: int) -> Tuple[int, ...]:
    return t[:index] + (value,) + t[index + 1:]


class CoeffFn:
    """チャート上の係数関数

    項キー (α, β, m) から係数へのスパースな写像。ゼロ係数は保持しない。
    値は不変で、演算は全て新しいインスタンスを返す。
    """

    __slots__ = ("chart", "_terms", "_hash")

    def __init__(self, chart: ChartSpec, terms: Optional[Mapping[TermKey, Scalar]] = None):
        self.chart = chart
        cleaned: Dict[TermKey, GaussianRational] = {}
        for key, value in (terms or {}).items():
            alpha, beta, m = key
            if len(alpha) != chart.n or len(beta) != chart.n or len(m) != chart.k:
                raise InputError(f"Term key {key} does not fit chart n={chart.n}, k={chart.k}")
            if any(x < 0 for x in alpha) or any(x < 0 for x in beta):
                raise InputError(f"Negative exponent in term key {key}")
            coeff = GaussianRational.of(value)
            if coeff:
                cleaned[(tuple(alpha), tuple(beta), tuple(m))] = coeff
        self._terms = cleaned
        self._hash = None

    # ---- 生成 ----

    @classmethod
    def zero(cls, chart: ChartSpec) -> "CoeffFn":
        return cls(chart)

    @classmethod
    def constant(cls, chart: ChartSpec, value: Scalar = 1) -> "CoeffFn":
        zeros = (0,) * chart.n
        return cls(chart, {(zeros, zeros, (0,) * chart.k): value})

    @classmethod
    def monomial(
        cls,
        chart: ChartSpec,
        alpha: Iterable[int] = (),
        beta: Iterable[int] = (),
        m: Iterable[int] = (),
        coeff: Scalar = 1,
    ) -> "CoeffFn":
        """単項式 coeff · I^α φ^β e^{i m·φ} を生成（空の指数はゼロ扱い）"""
        alpha = tuple(alpha) or (0,) * chart.n
        beta = tuple(beta) or (0,) * chart.n
        m = tuple(m) or (0,) * chart.k
        return cls(chart, {(alpha, beta, m): coeff})

    @classmethod
    def action(cls, chart: ChartSpec, alpha: int, power: int = 1) -> "CoeffFn":
        """(I^{alpha+1})^power"""
        return cls.monomial(chart, alpha=_replace((0,) * chart.n, alpha, power))

    @classmethod
    def angle(cls, chart: ChartSpec, j: int, power: int = 1) -> "CoeffFn":
        """(φ^{j+1})^power"""
        return cls.monomial(chart, beta=_replace((0,) * chart.n, j, power))

    @classmethod
    def fourier(cls, chart: ChartSpec, j: int, mode: int, coeff: Scalar = 1) -> "CoeffFn":
        """coeff · e^{i·mode·φ^{j+1}}（j は周期角）"""
        if not chart.is_periodic(j):
            raise NonPeriodicDependence(f"Angle phi{j + 1} is not periodic on this chart")
        return cls.monomial(chart, m=_replace((0,) * chart.k, j, mode), coeff=coeff)

    @classmethod
    def cos(cls, chart: ChartSpec, j: int, mode: int = 1) -> "CoeffFn":
        half = Fraction(1, 2)
        return cls.fourier(chart, j, mode, half) + cls.fourier(chart, j, -mode, half)

    @classmethod
    def sin(cls, chart: ChartSpec, j: int, mode: int = 1) -> "CoeffFn":
        half = GaussianRational(0, Fraction(-1, 2))
        return cls.fourier(chart, j, mode, half) - cls.fourier(chart, j, -mode, half)

    # ---- 基本情報 ----

    def terms(self) -> List[Tuple[TermKey, GaussianRational]]:
        """(α, β, m) の辞書順で並べた項のリスト"""
        return sorted(self._terms.items())

    def __iter__(self) -> Iterator[Tuple[TermKey, GaussianRational]]:
        return iter(self.terms())

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, key: TermKey) -> GaussianRational:
        return self._terms.get(key, GaussianRational())

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, CoeffFn):
            return self.chart == other.chart and self._terms == other._terms
        if isinstance(other, (int, Fraction, GaussianRational)) and not isinstance(other, bool):
            return self == CoeffFn.constant(self.chart, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.chart, frozenset(self._terms.items())))
        return self._hash

    def _check_chart(self, other: "CoeffFn") -> None:
        if self.chart != other.chart:
            raise ChartMismatch(f"Chart mismatch: {self.chart} vs {other.chart}")

    def _coerce(self, other: Union["CoeffFn", Scalar]) -> "CoeffFn":
        if isinstance(other, CoeffFn):
            self._check_chart(other)
            return other
        return CoeffFn.constant(self.chart, other)

    # ---- 環演算 ----

    def __add__(self, other: Union["CoeffFn", Scalar]) -> "CoeffFn":
        other = self._coerce(other)
        terms = dict(self._terms)
        for key, value in other._terms.items():
            terms[key] = terms.get(key, GaussianRational()) + value
        return CoeffFn(self.chart, terms)

    __radd__ = __add__

    def __neg__(self) -> "CoeffFn":
        return CoeffFn(self.chart, {key: -value for key, value in self._terms.items()})

    def __sub__(self, other: Union["CoeffFn", Scalar]) -> "CoeffFn":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Scalar) -> "CoeffFn":
        return self._coerce(other) - self

    def scale(self, value: Scalar) -> "CoeffFn":
        value = GaussianRational.of(value)
        if not value:
            return CoeffFn.zero(self.chart)
        return CoeffFn(self.chart, {key: c * value for key, c in self._terms.items()})

    def __mul__(self, other: Union["CoeffFn", Scalar]) -> "CoeffFn":
        if not isinstance(other, CoeffFn):
            return self.scale(other)
        self._check_chart(other)
        terms: Dict[TermKey, GaussianRational] = {}
        for (a1, b1, m1), c1 in self._terms.items():
            for (a2, b2, m2), c2 in other._terms.items():
                key = (_add_tuples(a1, a2), _add_tuples(b1, b2), _add_tuples(m1, m2))
                terms[key] = terms.get(key, GaussianRational()) + c1 * c2
        return CoeffFn(self.chart, terms)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "CoeffFn":
        if exponent < 0:
            raise InputError("CoeffFn powers must be non-negative")
        result = CoeffFn.constant(self.chart)
        for _ in range(exponent):
            result = result * self
        return result

    # ---- 微積分 ----

    def diff(self, slot: int) -> "CoeffFn":
        """座標スロット slot による偏微分"""
        chart = self.chart
        if not 0 <= slot < chart.dim:
            raise InputError(f"Coordinate slot out of range: {slot}")
        terms: Dict[TermKey, GaussianRational] = {}

        def put(key: TermKey, value: GaussianRational) -> None:
            terms[key] = terms.get(key, GaussianRational()) + value

        for (alpha, beta, m), c in self._terms.items():
            if chart.is_action(slot):
                if alpha[slot]:
                    put((_replace(alpha, slot, alpha[slot] - 1), beta, m), c * alpha[slot])
                continue
            j = slot - chart.n
            if beta[j]:
                put((alpha, _replace(beta, j, beta[j] - 1), m), c * beta[j])
            if chart.is_periodic(j) and m[j]:
                put((alpha, beta, m), c * GaussianRational(0, m[j]))
        return CoeffFn(chart, terms)

    def angle_integral(self, j: int) -> "CoeffFn":
        """φ^{j+1} について 0 から φ までの積分"""
        chart = self.chart
        if not 0 <= j < chart.n:
            raise InputError(f"Angle index out of range: {j}")
        terms: Dict[TermKey, GaussianRational] = {}

        def put(key: TermKey, value: GaussianRational) -> None:
            terms[key] = terms.get(key, GaussianRational()) + value

        for (alpha, beta, m), c in self._terms.items():
            b = beta[j]
            mode = m[j] if chart.is_periodic(j) else 0
            if mode == 0:
                put((alpha, _replace(beta, j, b + 1), m), c / (b + 1))
                continue
            w = GaussianRational(0, mode)
            falling = 1
            for t in range(b + 1):
                # φ^b e^{wφ} の原始関数の第 t 項
                sign = -1 if t % 2 else 1
                put((alpha, _replace(beta, j, b - t), m), c * (sign * falling) / (w ** (t + 1)))
                falling *= b - t
            sign = -1 if b % 2 else 1
            at_zero = (alpha, _replace(beta, j, 0), _replace(m, j, 0))
            put(at_zero, -(c * (sign * factorial(b)) / (w ** (b + 1))))
        return CoeffFn(chart, terms)

    def torus_average(self, j: int) -> "CoeffFn":
        """周期角 φ^{j+1} についての周期平均"""
        if not self.chart.is_periodic(j):
            raise NonPeriodicDependence(f"Angle phi{j + 1} is not periodic on this chart")
        for (alpha, beta, m), _ in self._terms.items():
            if beta[j]:
                raise NonPeriodicDependence(
                    f"Polynomial dependence on periodic angle phi{j + 1}",
                    detail=(alpha, beta, m),
                )
        return CoeffFn(self.chart, {key: c for key, c in self._terms.items() if key[2][j] == 0})

    def set_angle_zero(self, j: int) -> "CoeffFn":
        """φ^{j+1} = 0 を代入"""
        terms: Dict[TermKey, GaussianRational] = {}
        for (alpha, beta, m), c in self._terms.items():
            if beta[j]:
                continue
            if self.chart.is_periodic(j):
                m = _replace(m, j, 0)
            key = (alpha, beta, m)
            terms[key] = terms.get(key, GaussianRational()) + c
        return CoeffFn(self.chart, terms)

    # ---- 述語 ----

    def conjugate(self) -> "CoeffFn":
        return CoeffFn(
            self.chart,
            {(alpha, beta, tuple(-x for x in m)): c.conjugate() for (alpha, beta, m), c in self._terms.items()},
        )

    def is_real(self) -> bool:
        return self == self.conjugate()

    def descends_to_torus(self) -> bool:
        k = self.chart.k
        return all(not any(beta[:k]) for (_, beta, _), _ in self._terms.items())

    def is_fourier_free(self) -> bool:
        return all(not any(m) for (_, _, m), _ in self._terms.items())

    def is_action_only(self) -> bool:
        return all(not any(beta) and not any(m) for (_, beta, m), _ in self._terms.items())

    def angle_degree(self) -> int:
        """角変数についての多項式次数（ゼロ関数は -1）"""
        return max((sum(beta) for (_, beta, _), _ in self._terms.items()), default=-1)

    def constant_value(self) -> Optional[GaussianRational]:
        """定数関数ならその値、そうでなければ None"""
        if not self._terms:
            return GaussianRational()
        if len(self._terms) == 1:
            (alpha, beta, m), c = next(iter(self._terms.items()))
            if not any(alpha) and not any(beta) and not any(m):
                return c
        return None

    # ---- 直列化 ----

    def to_records(self) -> List[Dict[str, object]]:
        records = []
        for (alpha, beta, m), c in self.terms():
            record: Dict[str, object] = {"alpha": list(alpha), "beta": list(beta), "m": list(m)}
            record.update(c.to_record())
            records.append(record)
        return records

    @classmethod
    def from_records(cls, chart: ChartSpec, records: Iterable[Mapping[str, object]]) -> "CoeffFn":
        terms: Dict[TermKey, GaussianRational] = {}
        for record in records:
            try:
                alpha = tuple(int(x) for x in record.get("alpha", [0] * chart.n))
                beta = tuple(int(x) for x in record.get("beta", [0] * chart.n))
                m = tuple(int(x) for x in record.get("m", [0] * chart.k))
            except (TypeError, ValueError) as e:
                raise ParseError(f"Malformed term record: {record!r}") from e
            value = GaussianRational(parse_rational(record.get("re", 0)), parse_rational(record.get("im", 0)))
            key = (alpha, beta, m)
            terms[key] = terms.get(key, GaussianRational()) + value
        return cls(chart, terms)

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        names = self.chart.coordinate_names
        for (alpha, beta, m), c in self.terms():
            factors = []
            for i, e in enumerate(alpha):
                if e:
                    factors.append(names[i] if e == 1 else f"{names[i]}^{e}")
            for i, e in enumerate(beta):
                if e:
                    name = names[self.chart.n + i]
                    factors.append(name if e == 1 else f"{name}^{e}")
            if any(m):
                phase = "+".join(f"{x}*phi{i + 1}" for i, x in enumerate(m) if x)
                factors.append(f"exp(i({phase}))")
            body = "*".join(factors)
            if not body:
                parts.append(str(c))
            elif c == ONE:
                parts.append(body)
            else:
                parts.append(f"{c}*{body}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"CoeffFn({self.to_text()})"


def cf_add(a: CoeffFn, b: CoeffFn) -> CoeffFn:
    return a + b


def cf_mul(a: CoeffFn, b: CoeffFn) -> CoeffFn:
    return a * b


def cf_diff(a: CoeffFn, v: int) -> CoeffFn:
    return a.diff(v)


def cf_angle_integral(a: CoeffFn, j: int) -> CoeffFn:
    return a.angle_integral(j)


def cf_torus_average(a: CoeffFn, j: int) -> CoeffFn:
    return a.torus_average(j)
