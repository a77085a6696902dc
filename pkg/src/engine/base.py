"""ベースエンジンクラス

量子（Moyal）版と半古典（ファイバーPoisson）版で共通の漸化式:
    γ = δ⁻¹(S + ∂γ + ½{γ, γ})
    σ(f) = f + δ⁻¹(∂σ(f) + {γ, σ(f)})
ここで {·,·} は各エンジンの括弧。
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional

from tqdm import tqdm

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, SymplecticData, WeylSection, delta, delta_inv
from src.config.settings import Settings
from src.errors import ChartMismatch
from src.geometry.connection import ConnectionData, covariant_derivative, curvature


@dataclass(frozen=True)
class Geometry:
    """チャート、シンプレクティックデータ、接続の組"""

    chart: ChartSpec
    symplectic: SymplecticData
    connection: ConnectionData

    def __post_init__(self):
        if self.symplectic.chart != self.chart or self.connection.chart != self.chart:
            raise ChartMismatch("Geometry components live on different charts")

    @classmethod
    def flat(cls, chart: ChartSpec) -> "Geometry":
        """標準形 ω と零接続"""
        symplectic = SymplecticData.standard(chart)
        return cls(chart, symplectic, ConnectionData.zero(chart, symplectic))

    def to_records(self) -> Dict[str, Any]:
        return {
            "chart": self.chart.to_record(),
            "symplectic": self.symplectic.to_records(),
            "connection": self.connection.to_records(),
        }


def track(items: List[Any], desc: str, config: Optional[Settings] = None) -> Any:
    """設定に従って tqdm で進捗を表示するイテレータ"""
    config = config or Settings()
    return tqdm(items, desc=desc, disable=not config.progress.get("enabled", True))


class BaseEngine(ABC):
    """全てのエンジンの基底クラス"""

    def __init__(self, geometry: Geometry, caps: Caps, config: Optional[Settings] = None):
        """
        Args:
            geometry: チャート上の幾何データ
            caps: 打ち切り次数
            config: 設定オブジェクト
        """
        self.geometry = geometry
        self.caps = caps
        self.config = config or Settings()
        self.logger = self._setup_logger()

    @property
    def chart(self) -> ChartSpec:
        return self.geometry.chart

    @property
    def symplectic(self) -> SymplecticData:
        return self.geometry.symplectic

    def _setup_logger(self) -> logging.Logger:
        """ロガーの設定"""
        logger = logging.getLogger(self.__class__.__name__)
        logger.setLevel(self.config.logging["level"])

        # コンソールハンドラーの設定
        if not logger.handlers:
            handler = logging.StreamHandler()
            formatter = logging.Formatter(self.config.logging["format"])
            handler.setFormatter(formatter)
            logger.addHandler(handler)
            logger.propagate = False

        return logger

    def process_with_progress(self, items: List[Any], process_func: Callable[[Any], Any], desc: str = "Processing") -> List[Any]:
        """プログレスバー付きでアイテムを処理（結果は入力順）"""
        return [process_func(item) for item in track(items, desc, self.config)]

    @abstractmethod
    def bracket(self, a: WeylSection, b: WeylSection) -> WeylSection:
        """エンジン固有の括弧（(1/ℏ)[a, b] または {a, b}_fib）"""

    @abstractmethod
    def source(self) -> WeylSection:
        """γ の漸化式の定数項 S"""

    def zero(self) -> WeylSection:
        return WeylSection.zero(self.chart, self.caps)

    def curvature_form(self) -> WeylSection:
        return curvature(self.geometry.connection, self.symplectic, self.caps).form

    def nabla(self, a: WeylSection) -> WeylSection:
        """∂a = da + (1/ℏ)[Γ, a]（Γ は y について2次なので {Γ, a}_fib と一致）"""
        return covariant_derivative(a, self.geometry.connection, self.symplectic)

    def connection_d(self, gamma: WeylSection, a: WeylSection) -> WeylSection:
        """Da = ∂a − δa + {γ, a}"""
        return self.nabla(a) - delta(a) + self.bracket(gamma, a)

    def solve_gamma(self) -> WeylSection:
        """γ の不動点反復（高々 caps.degree 回）"""
        source = self.source()
        gamma = self.zero()
        half = Fraction(1, 2)
        for step in range(self.caps.degree):
            rhs = source + self.nabla(gamma) + self.bracket(gamma, gamma).scale(half)
            updated = delta_inv(rhs)
            self.logger.debug(f"gamma pass {step + 1}: {len(updated)} terms")
            if updated == gamma:
                break
            gamma = updated
        return gamma

    def lift_section(self, gamma: WeylSection, f: CoeffFn) -> WeylSection:
        """平坦切断 σ(f) の不動点反復"""
        if f.chart != self.chart:
            raise ChartMismatch("Function lives on another chart")
        base = WeylSection.scalar(self.chart, self.caps, f)
        sigma = base
        for _ in range(self.caps.degree):
            updated = base + delta_inv(self.nabla(sigma) + self.bracket(gamma, sigma))
            if updated == sigma:
                break
            sigma = updated
        return sigma

    def flatness_residual(self, gamma: WeylSection, a: WeylSection) -> WeylSection:
        """D(Da)"""
        return self.connection_d(gamma, self.connection_d(gamma, a))
