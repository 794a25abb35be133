"""Byte-deterministic JSON and CSV output."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

CONVERGENCE_HEADER = "n,r_n,p_n,eps_n,theta_n,lam_n,min_div"


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k)}: {_encode(v, indent, level + 1)}" for k, v in items)
        return "{\n" + body + "\n" + close + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        body = ",\n".join(pad + _encode(v, indent, level + 1) for v in seq)
        return "[\n" + body + "\n" + close + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with sorted keys and every float as ``%.17g``."""
    return _encode(obj, indent, 0) + "\n"


def csv_text(header: str, rows) -> str:
    lines = [header]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
                cells.append(str(int(v)))
            elif isinstance(v, (float, np.floating)):
                cells.append(format_float(float(v)))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def emit_report(result, fmt: str, path: str | Path, header: str = CONVERGENCE_HEADER) -> Path:
    """Write ``result`` as JSON, or as CSV rows under ``header``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        text = dumps(result if result is not None else {})
    elif fmt == "csv":
        text = csv_text(header, result or [])
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path.write_text(text)
    return path
