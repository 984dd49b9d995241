"""
Run reports and their on-disk forms.

JSON layout (``schema_version`` 1)::

    {"schema_version": 1, "software_version": ..., "mode": ...,
     "config": {...}, "records": [{...}, ...], "summary": {...},
     "timing": {...}, "metadata": {...}}

CSV layout: one ``# key: <json>`` comment line for each top-level field other
than ``records``, then a header row and one row per record. Column names are
the record keys, in first-seen order. Floats use 17 significant digits in both
formats. Empty cells stand for JSON ``null``; booleans are ``true`` and
``false``.

Timing-dependent content lives in ``timing``, ``metadata`` and the record keys
in :data:`TIMING_FIELDS`. :func:`strip_timing` removes exactly those.
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any, Dict, List

SCHEMA_VERSION = 1
TIMING_FIELDS = ("wall_time", "peak_bytes")


@dataclass
class RunReport:
    mode: str
    config: Dict[str, Any]
    records: List[Dict[str, Any]]
    summary: Dict[str, Any]
    software_version: str
    timing: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "software_version": self.software_version,
            "mode": self.mode,
            "config": self.config,
            "records": self.records,
            "summary": self.summary,
            "timing": self.timing,
            "metadata": self.metadata,
        }


def strip_timing(doc: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(doc)
    out.pop("timing", None)
    out.pop("metadata", None)
    for rec in out.get("records", []):
        for key in TIMING_FIELDS:
            rec.pop(key, None)
    return out


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def dumps_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits.

    Non-finite floats become ``null``.
    """
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + dumps_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):
        return dumps_json(obj.item(), indent, _level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if not math.isfinite(v) else format_float(v)
    return str(v)


def dumps_csv(doc: Dict[str, Any]) -> str:
    buf = io.StringIO()
    for key, value in doc.items():
        if key != "records":
            buf.write(f"# {key}: {dumps_json(value, indent=0).replace(chr(10), '')}\n")
    columns: List[str] = []
    for rec in doc["records"]:
        for k in rec:
            if k not in columns:
                columns.append(k)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in doc["records"]:
        writer.writerow([_csv_cell(rec.get(k)) for k in columns])
    return buf.getvalue()


def read_csv_records(text: str) -> List[Dict[str, str]]:
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(rows))


def render(report: RunReport, fmt: str) -> str:
    doc = report.to_dict()
    if fmt == "json":
        return dumps_json(doc) + "\n"
    if fmt == "csv":
        return dumps_csv(doc)
    raise ValueError(f"unknown output format {fmt!r}")


def check_writable(path: str) -> None:
    """Raise OSError unless a file can be created at ``path``."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(directory):
        raise OSError(f"output directory does not exist: {directory}")
    if os.path.isdir(path):
        raise OSError(f"output path is a directory: {path}")
    if not os.access(directory, os.W_OK):
        raise OSError(f"output directory is not writable: {directory}")


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file in the same directory and ``os.replace``."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", suffix=os.path.basename(path), dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
