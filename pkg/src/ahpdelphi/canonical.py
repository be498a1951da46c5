"""Byte-stable JSON rendering.

The CLI's json output and the service's exported documents must be
bit-identical for identical inputs, so floats are formatted with a fixed
rule (12 significant digits) and object keys are always sorted. The
standard json encoder keys float formatting to ``repr`` which is not a
stable public contract, hence this small hand-rolled serializer.
"""

from __future__ import annotations

import json
import math


def format_float(value: float) -> str:
    """Render a float with 12 significant digits, shortest form."""
    if math.isnan(value) or math.isinf(value):
        raise ValueError("non-finite numbers have no canonical JSON form")
    text = format(value, ".12g")
    # ".12g" may produce exponents like 1e-07; normalize to e-7 style json
    # accepts either, keep as produced for stability.
    return text


def canonical_json(obj) -> str:
    """Serialize to canonical JSON: sorted keys, compact separators,
    floats at 12 significant digits. Returns a string without trailing
    newline; exporting twice yields identical bytes."""
    parts: list[str] = []
    _write(obj, parts)
    return "".join(parts)


def _write(obj, parts: list[str]) -> None:
    if obj is None or isinstance(obj, bool):
        parts.append(json.dumps(obj))
    elif isinstance(obj, int):
        parts.append(str(obj))
    elif isinstance(obj, float):
        parts.append(format_float(obj))
    elif isinstance(obj, str):
        parts.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        parts.append("{")
        for idx, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"canonical JSON keys must be strings, got {key!r}")
            if idx:
                parts.append(",")
            parts.append(json.dumps(key, ensure_ascii=False))
            parts.append(":")
            _write(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for idx, item in enumerate(obj):
            if idx:
                parts.append(",")
            _write(item, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot canonicalize {type(obj).__name__}")
