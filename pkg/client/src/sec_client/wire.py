"""The sec/1 message grammar, client side.

Implemented from the protocol document alone: one JSON object per LF
line, fields in the documented order, integers in shortest form, reals
with 17 significant digits so doubles round-trip exactly.
"""

from __future__ import annotations

import json
import math
from typing import Any, Iterable

from .errors import MalformedReply

VERSION = "sec/1"

REPLY_KINDS = ("hello", "batch", "ack", "snapshot-reply", "error")


def format_real(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"non-finite real not representable: {x!r}")
    return format(x, ".17g")


def emit_json(value: Any) -> str:
    """Compact JSON with insertion-ordered keys and .17g reals."""
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
            f"{json.dumps(k, ensure_ascii=False)}:{emit_json(v)}"
            for k, v in value.items()
        )
        return "{" + items + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(emit_json(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def emit_line(value: Any) -> str:
    return emit_json(value) + "\n"


# -- request builders (field order is the wire order) -------------------------


def hello_request(version: str = VERSION) -> dict:
    # step 0 is carried for uniformity; the server ignores hello's step.
    return {"kind": "hello", "step": 0, "version": version}


def get_batch_request(step: int) -> dict:
    return {"kind": "get-batch", "step": step}


def report_request(step: int, pairs: Iterable[tuple[str, float]]) -> dict:
    return {
        "kind": "report",
        "step": step,
        "values": [[pid, float(v)] for pid, v in pairs],
    }


def snapshot_request(step: int) -> dict:
    return {"kind": "snapshot", "step": step}


# -- reply parsing ------------------------------------------------------------


def _step_of(obj: dict) -> int:
    step = obj.get("step")
    if isinstance(step, bool) or not isinstance(step, int) or step < 0:
        raise MalformedReply(f"bad step field: {step!r}")
    return step


def parse_reply(line: str) -> dict:
    """One reply line -> validated message dict.

    Shape checks cover exactly what the session relies on; anything the
    grammar does not allow raises MalformedReply.
    """
    try:
        obj = json.loads(line)
    except ValueError as exc:
        raise MalformedReply(f"reply is not JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedReply("reply is not a JSON object")
    kind = obj.get("kind")
    if kind not in REPLY_KINDS:
        raise MalformedReply(f"unknown reply kind: {kind!r}")
    _step_of(obj)
    if kind == "hello":
        if not isinstance(obj.get("version"), str):
            raise MalformedReply("hello reply without version")
        if isinstance(obj.get("batch_size"), bool) or not isinstance(
            obj.get("batch_size"), int
        ):
            raise MalformedReply("hello reply without batch_size")
        if not isinstance(obj.get("registry_sha256"), str):
            raise MalformedReply("hello reply without registry_sha256")
    elif kind == "batch":
        entries = obj.get("entries")
        if not isinstance(entries, list):
            raise MalformedReply("batch reply without entries")
        for entry in entries:
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not isinstance(entry[0], str)
                or not isinstance(entry[1], str)
            ):
                raise MalformedReply(f"bad batch entry: {entry!r}")
    elif kind == "snapshot-reply":
        q = obj.get("q")
        if not isinstance(q, list):
            raise MalformedReply("snapshot reply without q")
        for entry in q:
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not isinstance(entry[0], str)
                or isinstance(entry[1], bool)
                or not isinstance(entry[1], (int, float))
            ):
                raise MalformedReply(f"bad q entry: {entry!r}")
    elif kind == "error":
        if not isinstance(obj.get("code"), str) or not isinstance(
            obj.get("message"), str
        ):
            raise MalformedReply("error reply without code/message")
    return obj
