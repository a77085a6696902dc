"""設定管理モジュール"""

import os
from pathlib import Path
from typing import Dict, Any, Optional
import yaml


class Settings:
    """設定管理クラス"""

    def __init__(self, config_path: Optional[str] = None):
        """
        Args:
            config_path: 設定ファイルのパス。Noneの場合はデフォルトパスを使用
        """
        if config_path is None:
            config_path = Path(__file__).parent.parent.parent / "config.yaml"

        self.config_path = Path(config_path)
        self._config = self._load_config()
        self._apply_env_overrides()

    def _load_config(self) -> Dict[str, Any]:
        """設定ファイルを読み込む"""
        if not self.config_path.exists():
            raise FileNotFoundError(f"Config file not found: {self.config_path}")

        with open(self.config_path, 'r', encoding='utf-8') as f:
            return yaml.safe_load(f) or {}

    def _apply_env_overrides(self) -> None:
        """環境変数による設定の上書き"""
        # ℏ の打ち切り次数の上書き
        if order := os.getenv("WEYLFORGE_ORDER"):
            self._config.setdefault("caps", {})["order"] = int(order)

        # ログレベルの上書き
        if log_level := os.getenv("WEYLFORGE_LOG_LEVEL"):
            self._config.setdefault("logging", {})["level"] = log_level

    @property
    def caps(self) -> Dict[str, Any]:
        """打ち切り次数の設定（degree が None なら 2 × order）"""
        default = {"order": 2, "degree": None}
        return {**default, **self._config.get("caps", {})}

    @property
    def sampler(self) -> Dict[str, Any]:
        """ランダム接続サンプラーの設定"""
        default = {
            "max_action_degree": 1,
            "coefficient_bound": 2,
            "max_denominator": 2,
            "angle_terms": True,
            "density": 0.7,
        }
        return {**default, **self._config.get("sampler", {})}

    @property
    def star_table(self) -> Dict[str, Any]:
        """スター積テーブルの設定"""
        return {"max_degree": 2, **self._config.get("star_table", {})}

    @property
    def verification(self) -> Dict[str, Any]:
        """検証サンプル数などの設定"""
        return {"max_triples": 27, **self._config.get("verification", {})}

    @property
    def output(self) -> Dict[str, str]:
        """出力ファイル関連の設定"""
        defaults = {"state_file": "./out/state.json", "table_file": "./out/star_table.csv"}
        return {**defaults, **self._config.get("output", {})}

    @property
    def progress(self) -> Dict[str, Any]:
        """進捗表示の設定"""
        return {"enabled": True, **self._config.get("progress", {})}

    @property
    def logging(self) -> Dict[str, Any]:
        """ログ関連の設定"""
        default = {
            "level": "INFO",
            "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
        }
        return {**default, **self._config.get("logging", {})}

    def get(self, key: str, default: Any = None) -> Any:
        """任意のキーで設定値を取得"""
        return self._config.get(key, default)
