"""Line-delimited JSON trace output.

Each record is ``{"time", "node", "kind", "detail"}`` in that order.  Times
and other reals are written with 17 significant digits so they read back to
the same double.  Detail keys keep their insertion order, which is fixed by
the code that records them, so output is byte-stable across runs.
"""

from __future__ import annotations

import enum
import json
import math
from fractions import Fraction
from typing import Any, Iterable, TextIO

from ..simkernel import Point, TraceRecord


def render(value: Any) -> str:
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (float, Fraction)):
        x = float(value)
        if not math.isfinite(x):
            raise ValueError(f"cannot render non-finite value {x!r}")
        return format(x, ".17g")
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=True)
    if isinstance(value, enum.Enum):
        return render(value.value)
    if isinstance(value, Point):
        return render([value.x, value.y])
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(render(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{render(v)}" for k, v in value.items()) + "}"
    raise TypeError(f"cannot render {type(value).__name__}")


def format_record(rec: TraceRecord) -> str:
    return render({"time": rec.time, "node": rec.node, "kind": rec.kind, "detail": rec.detail})


def header_line(cfg) -> str:
    return render({"kind": "header", "scenario": cfg.to_dict()})


def emit_trace(trace: Iterable[TraceRecord], sink: TextIO, header: Any = None) -> int:
    """Write one line per record (plus an optional scenario header); returns the line count."""
    n = 0
    if header is not None:
        sink.write(header_line(header) + "\n")
        n += 1
    for rec in trace:
        sink.write(format_record(rec) + "\n")
        n += 1
    return n


def read_trace(lines: Iterable[str]) -> tuple[dict | None, list[dict]]:
    header, records = None, []
    for line in lines:
        if not line.strip():
            continue
        obj = json.loads(line)
        if obj.get("kind") == "header" and "scenario" in obj and header is None and not records:
            header = obj["scenario"]
        else:
            records.append(obj)
    return header, records
