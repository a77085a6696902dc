"""例外クラス定義"""

from typing import Any, Optional


class WeylforgeError(Exception):
    """全てのエラーの基底クラス"""

    exit_code = 3

    def __init__(self, message: str, detail: Optional[Any] = None):
        """
        Args:
            message: エラーメッセージ
            detail: 問題の項や位置などの補足情報
        """
        super().__init__(message)
        self.detail = detail


class InputError(WeylforgeError, ValueError):
    """入力データの不備（終了コード2）"""

    exit_code = 2


class ChartMismatch(InputError):
    """異なるチャート上の値の演算"""


class CapMismatch(InputError):
    """打ち切り次数 (D, N) が一致しない"""


class NonPeriodicDependence(InputError):
    """周期角度に多項式依存がありトーラス平均が取れない"""


class FourierInFiltration(InputError):
    """フィルトレーション次数はフーリエ項を含まない切断にのみ定義される"""


class NotAntisymmetric(InputError):
    """シンプレクティック行列が反対称でない"""


class NotInvertible(InputError):
    """係数環上で逆行列が存在しない"""


class NotClosed(InputError):
    """微分形式が閉じていない"""


class NotSymmetric(InputError):
    """下付きクリストッフェル記号が完全対称でない"""


class NotFiberVanishing(InputError):
    """形式がファイバー上で消えない"""


class NonPeriodicInput(InputError):
    """周期角度について多項式依存を持つ入力"""


class NotDeformationOfOmega(InputError):
    """Ω が ω + O(ℏ) の形でない"""


class NotBaseForm(InputError):
    """作用変数のみに依存する形式が要求された"""


class ParseError(InputError):
    """問題ファイルの構文エラー"""


class SchemaVersionError(InputError):
    """未対応のスキーマバージョン"""


class ValidationError(InputError):
    """問題ファイルの検証エラー"""


class HashMismatch(InputError):
    """保存文書のハッシュが一致しない"""


class VersionError(InputError):
    """保存文書のバージョンが未対応"""


class InternalConsistencyError(WeylforgeError):
    """内部整合性の破綻（終了コード3）"""

    exit_code = 3


class NotDivisible(InternalConsistencyError):
    """ℏ で割り切れない項が存在する"""
