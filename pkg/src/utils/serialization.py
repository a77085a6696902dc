"""厳密有理数の文字列変換ユーティリティ"""

import hashlib
import json
from fractions import Fraction
from typing import Any, Union

from src.errors import ParseError


RationalLike = Union[int, Fraction, str]


def parse_rational(value: RationalLike) -> Fraction:
    """有理数を表す値を Fraction に変換

    Args:
        value: 整数、Fraction、または "p/q" 形式の文字列

    Returns:
        変換された Fraction

    Raises:
        ParseError: 解釈できない値、または分母が0の場合
    """
    if isinstance(value, bool):
        raise ParseError(f"Boolean is not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        # 小数表記は厳密性を失うので受け付けない
        if not text or "." in text or "e" in text.lower():
            raise ParseError(f"Malformed rational: {value!r}")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as e:
            raise ParseError(f"Malformed rational: {value!r}") from e
    raise ParseError(f"Unsupported rational value: {value!r}")


def format_rational(value: Fraction) -> str:
    """Fraction を "p/q" 文字列に変換（q=1 の場合は "p"）"""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def canonical_json(payload: Any) -> str:
    """決定的な JSON 文字列（キー順序固定）"""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def digest(payload: Any) -> str:
    """ペイロードの SHA-256 ハッシュ"""
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()
