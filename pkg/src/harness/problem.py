"""問題ファイルの読み込みと検証

問題ファイルは YAML（JSON もそのまま読める）で、pydantic モデルで
構造を検証したうえでドメインオブジェクトに変換する。
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import pydantic
import yaml
from pydantic import BaseModel, ConfigDict, Field

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, SymplecticData, WeylSection
from src.config.settings import Settings
from src.engine.base import Geometry
from src.engine.series import DifferentialOperator, OperatorSeries
from src.errors import InputError, ParseError, SchemaVersionError, ValidationError
from src.geometry.connection import ConnectionData, SamplerBounds, check_theorem21, sample_theorem21_connection
from src.geometry.symplectic import standard_matrix, validate_symplectic


SCHEMA_VERSION = 1

Index = Union[int, str]
RationalText = Union[int, str]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TermModel(StrictModel):
    """係数関数の1項（省略した指数はゼロ）"""

    alpha: List[int] = Field(default_factory=list)
    beta: List[int] = Field(default_factory=list)
    m: List[int] = Field(default_factory=list)
    re: RationalText = 0
    im: RationalText = 0


FunctionModel = Union[RationalText, List[TermModel]]


class ChartModel(StrictModel):
    n: int = Field(ge=1)
    k: int = Field(default=0, ge=0)


class CapsModel(StrictModel):
    order: Optional[int] = Field(default=None, ge=0)
    degree: Optional[int] = Field(default=None, ge=0)


class TensorEntry(StrictModel):
    indices: List[Index]
    coeff: FunctionModel


class FormTerm(StrictModel):
    """ℏ^order · coeff · dx^{indices}"""

    order: int = Field(default=0, ge=0)
    indices: List[Index] = Field(default_factory=list)
    coeff: FunctionModel


class OperatorTerm(StrictModel):
    mu: List[int]
    coeff: FunctionModel


class OperatorEntry(StrictModel):
    order: int = Field(ge=1)
    terms: List[OperatorTerm]


class SamplerModel(StrictModel):
    max_action_degree: Optional[int] = Field(default=None, ge=0)
    coefficient_bound: Optional[int] = Field(default=None, ge=0)
    max_denominator: Optional[int] = Field(default=None, ge=1)
    angle_terms: Optional[bool] = None
    density: Optional[float] = Field(default=None, ge=0, le=1)


StarKind = Literal["fedosov", "moyal", "opposite", "conjugated"]


class OptionsModel(StrictModel):
    """コマンド固有のオプション"""

    f: Optional[str] = None
    g: Optional[str] = None
    samples: Optional[List[str]] = None
    max_degree: Optional[int] = Field(default=None, ge=0)
    require_compliance: bool = False
    star_a: StarKind = "fedosov"
    star_b: StarKind = "fedosov"
    max_triples: Optional[int] = Field(default=None, ge=0)


class ProblemSpec(StrictModel):
    """問題ファイル全体"""

    version: int = SCHEMA_VERSION
    chart: ChartModel
    caps: CapsModel = Field(default_factory=CapsModel)
    symplectic: Optional[List[TensorEntry]] = None
    connection: Union[Literal["sampled"], List[TensorEntry]] = Field(default_factory=list)
    sampler: SamplerModel = Field(default_factory=SamplerModel)
    omega_corrections: List[FormTerm] = Field(default_factory=list)
    form: List[FormTerm] = Field(default_factory=list)
    functions: Dict[str, FunctionModel] = Field(default_factory=dict)
    operator: List[OperatorEntry] = Field(default_factory=list)
    options: OptionsModel = Field(default_factory=OptionsModel)
    seed: int = Field(default=0, ge=0)

    # ---- ドメインオブジェクトへの変換 ----

    def chart_spec(self) -> ChartSpec:
        if self.chart.k > self.chart.n:
            raise ValidationError("chart.k must not exceed chart.n", detail=("chart", "k"))
        return ChartSpec(self.chart.n, self.chart.k)

    def function(self, value: FunctionModel) -> CoeffFn:
        chart = self.chart_spec()
        if isinstance(value, (int, str)):
            return CoeffFn.from_records(chart, [{"re": value}])
        records = []
        for term in value:
            record = term.model_dump()
            for name, size in (("alpha", chart.n), ("beta", chart.n), ("m", chart.k)):
                if not record[name]:
                    record[name] = [0] * size
                elif len(record[name]) != size:
                    raise ValidationError(f"Term field {name} must have length {size}", detail=record)
            records.append(record)
        return CoeffFn.from_records(chart, records)

    def named_functions(self) -> Dict[str, CoeffFn]:
        return {name: self.function(value) for name, value in self.functions.items()}

    def named(self, name: Optional[str], field_name: str) -> CoeffFn:
        functions = self.named_functions()
        if name is None:
            raise ValidationError(f"Option {field_name} is required for this command", detail=("options", field_name))
        if name not in functions:
            raise ValidationError(f"Unknown function {name!r}", detail=("options", field_name))
        return functions[name]

    def sample_functions(self) -> List[CoeffFn]:
        functions = self.named_functions()
        names = self.options.samples if self.options.samples is not None else sorted(functions)
        missing = [name for name in names if name not in functions]
        if missing:
            raise ValidationError(f"Unknown functions in options.samples: {missing}", detail=("options", "samples"))
        return [functions[name] for name in names]

    def _index(self, token: Index) -> int:
        try:
            return self.chart_spec().coordinate_index(token)
        except InputError as e:
            raise ValidationError(str(e), detail=token) from e

    def symplectic_data(self) -> SymplecticData:
        chart = self.chart_spec()
        if self.symplectic is None:
            return validate_symplectic(chart, standard_matrix(chart))
        matrix = [[CoeffFn.zero(chart)] * chart.dim for _ in range(chart.dim)]
        for entry in self.symplectic:
            if len(entry.indices) != 2:
                raise ValidationError("Symplectic entries need two indices", detail=entry.indices)
            j, l = (self._index(i) for i in entry.indices)
            value = self.function(entry.coeff)
            # 上三角で与え、反対称に補完する
            matrix[j][l] = matrix[j][l] + value
            matrix[l][j] = matrix[l][j] - value
        return validate_symplectic(chart, matrix)

    def sampler_bounds(self, config: Optional[Settings] = None) -> SamplerBounds:
        config = config or Settings()
        values = {**config.sampler, **self.sampler.model_dump(exclude_none=True)}
        return SamplerBounds(**values)

    def geometry(self, config: Optional[Settings] = None) -> Geometry:
        chart = self.chart_spec()
        symplectic = self.symplectic_data()
        if self.connection == "sampled":
            connection = sample_theorem21_connection(chart, symplectic, self.seed, self.sampler_bounds(config))
        else:
            entries = []
            for entry in self.connection:
                if len(entry.indices) != 3:
                    raise ValidationError("Connection entries need three indices", detail=entry.indices)
                entries.append((tuple(self._index(i) for i in entry.indices), self.function(entry.coeff)))
            connection = ConnectionData.from_entries(chart, symplectic, entries)
        return Geometry(chart, symplectic, connection)

    def _form_section(self, terms: List[FormTerm], caps: Caps) -> WeylSection:
        chart = self.chart_spec()
        total = WeylSection.zero(chart, caps)
        for term in terms:
            slots = [self._index(i) for i in term.indices]
            total = total + WeylSection.monomial(chart, caps, l=term.order, g=slots, coeff=self.function(term.coeff))
        return total

    def omega(self, geometry: Geometry, caps: Caps) -> WeylSection:
        """Ω = ω + Σ ℏ^l Ω_l"""
        return geometry.symplectic.form(caps) + self._form_section(self.omega_corrections, caps)

    def form_section(self, caps: Caps) -> WeylSection:
        return self._form_section(self.form, caps)

    def operator_series(self) -> OperatorSeries:
        chart = self.chart_spec()
        operators = {}
        for entry in self.operator:
            terms = [(term.mu, self.function(term.coeff)) for term in entry.terms]
            operators[entry.order] = DifferentialOperator(chart, terms)
        return OperatorSeries(chart, operators)

    def resolve_caps(
        self,
        order: Optional[int] = None,
        degree: Optional[int] = None,
        allow_shallow: bool = False,
        config: Optional[Settings] = None,
    ) -> Tuple[Caps, bool]:
        """打ち切り次数を決める（コマンドライン > 問題ファイル > 設定）

        Returns:
            (caps, possibly_truncated)
        """
        config = config or Settings()
        n_order = order if order is not None else self.caps.order
        if n_order is None:
            n_order = int(config.caps["order"])
        d_degree = degree if degree is not None else self.caps.degree
        if d_degree is None:
            d_degree = config.caps["degree"] if config.caps["degree"] is not None else 2 * n_order
        if d_degree < 2 * n_order and not allow_shallow:
            raise InputError(
                f"Degree cap D={d_degree} is below 2N={2 * n_order}; pass --allow-shallow-degree to override"
            )
        return Caps(int(d_degree), int(n_order)), d_degree < 2 * n_order


COMPLIANCE_COMMANDS = {"quantize-lagrangian"}


def require_compliance(geometry: Geometry) -> None:
    """ファイバー適合条件を満たさない接続を ValidationError で拒否"""
    report = check_theorem21(geometry.connection)
    if not report.passed:
        raise ValidationError(
            f"Connection violates fiber-adapted constraints: {', '.join(report.violations)}",
            detail={name: report.check(name).residuals for name in report.violations},
        )


def load_problem(path: Union[str, Path], config: Optional[Settings] = None) -> ProblemSpec:
    """問題ファイルを読み込み、全てのドメイン入力を検証する

    Raises:
        ParseError: 構文エラーまたは不正な有理数
        SchemaVersionError: 未対応のバージョン
        ValidationError: スキーマまたは内容の検証エラー
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"Problem file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ParseError(f"Cannot parse problem file {path}: {e}") from e
    if not isinstance(raw, dict):
        raise ParseError(f"Problem file {path} must contain a mapping")
    version = raw.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"Unsupported problem schema version: {version}")
    try:
        spec = ProblemSpec.model_validate(raw)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ValidationError(f"{location}: {first['msg']}", detail=e.errors()) from e

    geometry = spec.geometry(config)
    spec.named_functions()
    spec.operator_series()
    if spec.options.require_compliance:
        require_compliance(geometry)
    return spec


@dataclass
class LoadedProblem:
    """コマンド実行用に変換済みの入力"""

    spec: ProblemSpec
    geometry: Geometry
    caps: Caps
    possibly_truncated: bool
