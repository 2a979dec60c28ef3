"""Canonical text serialization.

Every file and wire format in this package is line-delimited JSON with a
fixed field order and a fixed numeric format, so that equal state always
produces equal bytes.  Parsing uses the stdlib json module; emission goes
through emit_json() below because json.dumps cannot be told to format
reals with 17 significant digits.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any


def format_real(x: float) -> str:
    """Render a real with 17 significant digits (round-trips exactly)."""
    if not math.isfinite(x):
        raise ValueError(f"non-finite real not representable: {x!r}")
    return format(x, ".17g")


def emit_json(value: Any) -> str:
    """Serialize to JSON text with insertion-ordered keys and .17g reals."""
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, int):
        return repr(value)
    if isinstance(value, float):
        return format_real(value)
    if isinstance(value, dict):
        items = ",".join(
            f"{json.dumps(k, ensure_ascii=False)}:{emit_json(v)}" for k, v in value.items()
        )
        return "{" + items + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(emit_json(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def emit_line(value: Any) -> str:
    return emit_json(value) + "\n"


def parse_line(line: str) -> Any:
    return json.loads(line)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
