"""共通フィクスチャ"""

import pytest

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, SymplecticData
from src.config.settings import Settings
from src.engine.base import Geometry
from src.geometry.connection import ConnectionData


@pytest.fixture
def chart1() -> ChartSpec:
    """n=1, 周期角1つ"""
    return ChartSpec(1, 1)


@pytest.fixture
def chart1_open() -> ChartSpec:
    """n=1, 周期角なし"""
    return ChartSpec(1, 0)


@pytest.fixture
def chart2() -> ChartSpec:
    return ChartSpec(2, 1)


@pytest.fixture
def config() -> Settings:
    """進捗表示を切った設定"""
    settings = Settings()
    settings._config["progress"] = {"enabled": False}
    return settings


@pytest.fixture
def flat1(chart1) -> Geometry:
    return Geometry.flat(chart1)


@pytest.fixture
def flat1_open(chart1_open) -> Geometry:
    return Geometry.flat(chart1_open)


def connection_geometry(chart: ChartSpec, entries) -> Geometry:
    """下付き記号のリストから幾何データを作る"""
    symplectic = SymplecticData.standard(chart)
    return Geometry(chart, symplectic, ConnectionData.from_entries(chart, symplectic, entries))


@pytest.fixture
def curved1(chart1_open) -> Geometry:
    """Γ_{III} = 2φ（ファイバー適合）"""
    return connection_geometry(chart1_open, [((0, 0, 0), CoeffFn.angle(chart1_open, 0).scale(2))])


@pytest.fixture
def small_caps() -> Caps:
    return Caps.for_order(2)
