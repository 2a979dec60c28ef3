"""Wire format for the curriculum sidecar protocol ("sec/1").

One JSON object per line, UTF-8, LF-terminated.  Field order is fixed
per kind and reals are printed with 17 significant digits so that a
recorded session replays byte-for-byte.  PROTOCOL.md in the repository
root is the normative grammar; this module is the package's
implementation of both directions.

Requests travel trainer -> engine (hello, get-batch, report, snapshot),
replies travel engine -> trainer (hello, batch, ack, snapshot-reply,
error).  Exactly one step is in flight at a time.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

from .errors import ProtocolError
from .serialize import parse_line

VERSION = "sec/1"

REQUEST_KINDS = frozenset({"hello", "get-batch", "report", "snapshot"})
REPLY_KINDS = frozenset({"hello", "batch", "ack", "snapshot-reply", "error"})
KINDS = REQUEST_KINDS | REPLY_KINDS


# -- builders (field order here is the wire order) ---------------------------


def hello_request(version: str = VERSION) -> dict:
    # The step field is carried for uniformity; a connecting client does
    # not know the engine step yet, so the server ignores its value.
    return {"kind": "hello", "step": 0, "version": version}


def hello_reply(step: int, batch_size: int, registry_sha256: str) -> dict:
    return {
        "kind": "hello",
        "step": step,
        "version": VERSION,
        "batch_size": batch_size,
        "registry_sha256": registry_sha256,
    }


def get_batch_request(step: int) -> dict:
    return {"kind": "get-batch", "step": step}


def batch_reply(step: int, entries: Sequence[tuple[str, object]]) -> dict:
    return {
        "kind": "batch",
        "step": step,
        "entries": [[pid, str(category)] for pid, category in entries],
    }


def report_request(step: int, values: Mapping[str, float]) -> dict:
    return {
        "kind": "report",
        "step": step,
        "values": [[pid, float(v)] for pid, v in values.items()],
    }


def ack_reply(step: int) -> dict:
    return {"kind": "ack", "step": step}


def snapshot_request(step: int) -> dict:
    return {"kind": "snapshot", "step": step}


def snapshot_reply(step: int, q_items: Sequence[tuple[object, float]]) -> dict:
    return {
        "kind": "snapshot-reply",
        "step": step,
        "q": [[str(category), value] for category, value in q_items],
    }


def error_reply(step: int, code: str, message: str) -> dict:
    return {"kind": "error", "step": step, "code": code, "message": message}


# -- parsing / shape validation ----------------------------------------------


def parse_message(line: str) -> dict:
    """Parse one wire line into a message dict, checking common shape.

    Raises ProtocolError("malformed", ...) for anything that is not a
    JSON object with a known kind and a non-negative integer step.
    """
    try:
        obj = parse_line(line)
    except ValueError as exc:
        raise ProtocolError("malformed", f"not a JSON line: {exc}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("malformed", "message must be a JSON object")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise ProtocolError("malformed", f"unknown kind {kind!r}")
    step = obj.get("step")
    if isinstance(step, bool) or not isinstance(step, int) or step < 0:
        raise ProtocolError("malformed", "step must be a non-negative integer")
    return obj


def parse_report_values(obj: dict, expected_ids: Sequence[str]) -> dict[str, float]:
    """Validate a report body against the pending batch's unique ids.

    Every id issued in the batch must appear exactly once, no others,
    and every value must be a finite non-negative real.
    """
    values = obj.get("values")
    if not isinstance(values, list):
        raise ProtocolError("malformed", "report needs a values list")
    out: dict[str, float] = {}
    for item in values:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not isinstance(item[0], str)
        ):
            raise ProtocolError("malformed", "values entries must be [id, real] pairs")
        pid, value = item
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ProtocolError("bad-value", f"{pid}: value must be a real")
        value = float(value)
        if not math.isfinite(value) or value < 0.0:
            raise ProtocolError(
                "bad-value", f"{pid}: mean-abs advantage must be finite and >= 0"
            )
        if pid in out:
            raise ProtocolError("malformed", f"duplicate value for {pid}")
        out[pid] = value
    expected = set(expected_ids)
    for pid in out:
        if pid not in expected:
            raise ProtocolError("unknown-problem", f"{pid} was not in the batch")
    for pid in expected:
        if pid not in out:
            raise ProtocolError("missing-problem", f"no value reported for {pid}")
    return out
