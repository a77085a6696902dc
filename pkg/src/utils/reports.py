"""検証レポートと表形式出力のユーティリティ"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd


@dataclass
class CheckResult:
    """個別チェックの結果"""

    name: str
    passed: bool
    residuals: List[str] = field(default_factory=list)
    note: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {"name": self.name, "passed": self.passed, "residuals": list(self.residuals)}
        if self.note:
            record["note"] = self.note
        return record


@dataclass
class VerificationReport:
    """検証レポート

    残差が見つかっても例外は投げず、passed=False のチェックとして記録する。
    """

    title: str
    checks: List[CheckResult] = field(default_factory=list)
    data: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, residuals: List[str], note: Optional[str] = None) -> CheckResult:
        """残差リストからチェックを追加（空なら合格）"""
        check = CheckResult(name=name, passed=not residuals, residuals=list(residuals), note=note)
        self.checks.append(check)
        return check

    def check(self, name: str) -> CheckResult:
        for item in self.checks:
            if item.name == name:
                return item
        raise KeyError(name)

    def extend(self, other: "VerificationReport", prefix: Optional[str] = None) -> None:
        for item in other.checks:
            name = f"{prefix}.{item.name}" if prefix else item.name
            self.checks.append(CheckResult(name, item.passed, list(item.residuals), item.note))

    @property
    def violations(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
            "data": self.data,
        }

    def to_text(self) -> str:
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        for check in self.checks:
            lines.append(f"  [{'ok' if check.passed else 'NG'}] {check.name}" + (f" ({check.note})" if check.note else ""))
            for residual in check.residuals[:20]:
                lines.append(f"      {residual}")
            if len(check.residuals) > 20:
                lines.append(f"      ... {len(check.residuals) - 20} more")
        for key, value in sorted(self.data.items()):
            lines.append(f"  {key}: {value}")
        return "\n".join(lines)


def save_frame(df: pd.DataFrame, output_path: str) -> Path:
    """DataFrameをCSVに保存（親ディレクトリは自動作成）"""
    path = Path(output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False)
    return path
