"""Canonical serialization of reports.

JSON output is byte-stable: keys sorted, floats printed with 17 significant
digits, no whitespace between tokens.
"""
import csv
import dataclasses
import hashlib
import io
import json
import math
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .constants import TOOL_VERSION

CSV_INDEX_COLUMNS = ("N", "dim_ker", "dim_coker", "index", "sv_gap")


def config_hash(text: Optional[str]) -> Optional[str]:
    if text is None:
        return None
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def to_plain(obj: Any) -> Any:
    """Recursively convert dataclasses, enums, numpy and complex values to JSON-ready types."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.name.lower().replace("_", "-")
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        value = complex(obj)
        if value.imag == 0.0:
            return value.real
        return {"re": value.real, "im": value.imag}
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _format_float(value: float) -> str:
    if math.isnan(value):
        return '"nan"'
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    return format(value, ".17g")


def canonical_json(obj: Any) -> str:
    obj = to_plain(obj)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(f"{json.dumps(k, ensure_ascii=False)}:{canonical_json(v)}" for k, v in items) + "}"
    if isinstance(obj, list):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def envelope(command: str, result: Any, config_text: Optional[str], **extra: Any) -> Dict[str, Any]:
    payload = {"command": command, "tool_version": TOOL_VERSION, "config_hash": config_hash(config_text)}
    payload.update(extra)
    payload["result"] = to_plain(result)
    return payload


def to_csv(rows: Iterable[Dict[str, Any]], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        plain = to_plain(row)
        writer.writerow(
            [_format_float(plain[c]) if isinstance(plain.get(c), float) else plain.get(c, "") for c in columns]
        )
    return buffer.getvalue()


def index_rows(per_N: List[Any]) -> List[Dict[str, Any]]:
    return [{c: getattr(entry, c) for c in CSV_INDEX_COLUMNS} for entry in per_N]
