"""Canonical JSON output so equal data always serializes to equal bytes.

Keys are emitted sorted, floats with 17 significant digits, non-finite
values as null, and containers with a fixed 2-space indent.  Equal inputs
therefore produce byte-identical files regardless of dict construction
order or how the values were computed.
"""

from __future__ import annotations

import json
import math

import numpy as np


def _format_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    if x == int(x) and abs(x) < 1e16:
        # keep integral floats readable and unambiguous
        return f"{x:.1f}"
    return format(x, ".17g")


def _encode(obj, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj)))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        keys = sorted(str(k) for k in obj)
        if len(keys) != len(obj):
            raise ValueError("dict keys collide after string conversion")
        by_str = {str(k): v for k, v in obj.items()}
        out.append("{\n")
        for i, k in enumerate(keys):
            out.append(f"{pad}  {json.dumps(k)}: ")
            _encode(by_str[k], indent + 1, out)
            out.append(",\n" if i + 1 < len(keys) else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(items):
            out.append(pad + "  ")
            _encode(v, indent + 1, out)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize object of type {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    out: list[str] = []
    _encode(obj, 0, out)
    out.append("\n")
    return "".join(out)


def write_canonical_json(obj, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(canonical_dumps(obj))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
