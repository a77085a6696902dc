"""構成済み状態とスター積テーブルの保存・復元

文書はバージョン、種別、幾何ハッシュ、ペイロード、全体のダイジェストを持つ。
キー順序固定の JSON なので、保存→復元→保存はバイト単位で一致する。
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from src.algebra.coeff_ring import ChartSpec, CoeffFn
from src.algebra.weyl import Caps, WeylSection
from src.engine.base import Geometry
from src.engine.fedosov import FedosovState, StarTable
from src.engine.semiclassical import SemiclassicalState
from src.errors import HashMismatch, ParseError, VersionError
from src.geometry.connection import ConnectionData
from src.geometry.symplectic import validate_symplectic
from src.utils.serialization import digest


logger = logging.getLogger(__name__)

DOCUMENT_VERSION = 1

Persistable = Union[FedosovState, SemiclassicalState, StarTable]


def _geometry_from_records(records: Dict[str, Any]) -> Geometry:
    chart = ChartSpec(**records["chart"])
    matrix = [[CoeffFn.zero(chart)] * chart.dim for _ in range(chart.dim)]
    for entry in records["symplectic"]:
        j, l = entry["indices"]
        value = CoeffFn.from_records(chart, entry["coeff"])
        matrix[j][l] = value
        matrix[l][j] = -value
    symplectic = validate_symplectic(chart, matrix)
    entries = [(tuple(entry["indices"]), CoeffFn.from_records(chart, entry["coeff"])) for entry in records["connection"]]
    return Geometry(chart, symplectic, ConnectionData.from_entries(chart, symplectic, entries))


def _semiclassical_hash(state: SemiclassicalState) -> str:
    return digest({"geometry": state.geometry.to_records(), "caps": state.caps.to_record()})


def to_document(obj: Persistable) -> Dict[str, Any]:
    """保存用の文書を作る"""
    if isinstance(obj, FedosovState):
        kind = "fedosov-state"
        geometry_hash = obj.geometry_hash
        payload: Dict[str, Any] = {
            "geometry": obj.geometry.to_records(),
            "caps": obj.caps.to_record(),
            "omega": obj.omega.to_records(),
            "gamma": obj.gamma.to_records(),
        }
    elif isinstance(obj, SemiclassicalState):
        kind = "semiclassical-state"
        geometry_hash = _semiclassical_hash(obj)
        payload = {
            "geometry": obj.geometry.to_records(),
            "caps": obj.caps.to_record(),
            "gamma": obj.gamma.to_records(),
        }
    elif isinstance(obj, StarTable):
        kind = "star-table"
        geometry_hash = obj.geometry_hash
        payload = obj.to_records()
    else:
        raise TypeError(f"Cannot persist {type(obj).__name__}")
    body = {"version": DOCUMENT_VERSION, "kind": kind, "geometry_hash": geometry_hash, "payload": payload}
    return {**body, "digest": digest(body)}


def from_document(document: Dict[str, Any], chart: Optional[ChartSpec] = None, expected_hash: Optional[str] = None) -> Persistable:
    """文書から復元する

    Raises:
        VersionError: 未対応のバージョン
        HashMismatch: ダイジェストまたは幾何ハッシュが一致しない
    """
    if document.get("version") != DOCUMENT_VERSION:
        raise VersionError(f"Unsupported document version: {document.get('version')}")
    body = {key: document.get(key) for key in ("version", "kind", "geometry_hash", "payload")}
    if digest(body) != document.get("digest"):
        raise HashMismatch("Document digest does not match its content")
    if expected_hash is not None and document["geometry_hash"] != expected_hash:
        raise HashMismatch("Document was produced for a different geometry")

    kind, payload = document["kind"], document["payload"]
    try:
        if kind == "star-table":
            if chart is None:
                raise ParseError("Restoring a star table needs the chart")
            return StarTable.from_records(chart, payload)
        geometry = _geometry_from_records(payload["geometry"])
        caps = Caps(**payload["caps"])
        gamma = WeylSection.from_records(geometry.chart, caps, payload["gamma"])
        if kind == "fedosov-state":
            omega = WeylSection.from_records(geometry.chart, caps, payload["omega"])
            obj: Persistable = FedosovState(geometry, omega, gamma, caps)
            recomputed = obj.geometry_hash
        elif kind == "semiclassical-state":
            obj = SemiclassicalState(geometry, gamma, caps)
            recomputed = _semiclassical_hash(obj)
        else:
            raise ParseError(f"Unknown document kind: {kind!r}")
    except (KeyError, TypeError) as e:
        raise ParseError(f"Malformed document: {e}") from e
    if recomputed != document["geometry_hash"]:
        raise HashMismatch("Geometry hash does not match the stored geometry")
    return obj


def dumps(obj: Persistable) -> str:
    return json.dumps(to_document(obj), sort_keys=True, indent=2) + "\n"


def persist(obj: Persistable, path: Union[str, Path]) -> Path:
    """文書をファイルに保存（親ディレクトリは自動作成）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8")
    logger.info(f"Saved {type(obj).__name__} to {path}")
    return path


def restore(path: Union[str, Path], chart: Optional[ChartSpec] = None, expected_hash: Optional[str] = None) -> Persistable:
    """ファイルから復元"""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"Cannot parse document {path}: {e}") from e
    return from_document(document, chart, expected_hash)
