"""Canonical report serialization.

Reports must be byte-identical across runs with the same seed, so floats
are always rendered with 17 significant digits (enough to round-trip a
double) and mapping order is the insertion order fixed by the builders.
Non-finite floats become the strings "inf", "-inf" and "nan"; they never
appear in healthy reports but must not produce invalid JSON.
"""

from __future__ import annotations

import json
import math

__all__ = ["canonical_json", "flatten", "csv_lines"]


def _fmt_float(x: float) -> str:
    if math.isfinite(x):
        return format(x, ".17g")
    return json.dumps("nan" if math.isnan(x) else
                      "inf" if x > 0 else "-inf")


def _emit(obj, out: list, indent: int) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, val) in enumerate(obj.items()):
            out.append(f"{pad}  {json.dumps(str(key))}: ")
            _emit(val, out, indent + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            out.append("[]")
            return
        out.append("[\n")
        for i, val in enumerate(obj):
            out.append(pad + "  ")
            _emit(val, out, indent + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, float):
        out.append(_fmt_float(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} canonically")


def canonical_json(obj) -> str:
    out: list = []
    _emit(obj, out, 0)
    out.append("\n")
    return "".join(out)


def flatten(obj, prefix: str = "") -> dict:
    """Nested dict/list to a flat mapping with dotted keys."""
    flat: dict = {}
    if isinstance(obj, dict):
        for key, val in obj.items():
            name = f"{prefix}.{key}" if prefix else str(key)
            flat.update(flatten(val, name))
    elif isinstance(obj, (list, tuple)):
        for i, val in enumerate(obj):
            name = f"{prefix}.{i}" if prefix else str(i)
            flat.update(flatten(val, name))
    else:
        flat[prefix] = obj
    return flat


def _csv_cell(val) -> str:
    if isinstance(val, float):
        text = _fmt_float(val)
        return text.strip('"')
    text = "" if val is None else str(val)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def csv_lines(rows: list[dict]) -> str:
    """CSV with the union of keys in first-seen order."""
    cols: list[str] = []
    for row in rows:
        for key in row:
            if key not in cols:
                cols.append(key)
    lines = [",".join(_csv_cell(c) for c in cols)]
    for row in rows:
        lines.append(",".join(_csv_cell(row.get(c)) for c in cols))
    return "\n".join(lines) + "\n"
