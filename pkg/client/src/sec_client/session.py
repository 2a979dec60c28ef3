"""Synchronous client session for the sec/1 sidecar protocol.

The session is a transparent transport wrapper: it frames messages,
tracks the server-acknowledged step, and enforces the documented request
ordering, but contains no curriculum logic of any kind.
"""

from __future__ import annotations

import shlex
import socket
import subprocess
from typing import Iterable, Mapping

from . import wire
from .errors import (
    ConnectError,
    MalformedReply,
    OrderingError,
    PartialReport,
    ServerError,
    SessionClosed,
    VersionError,
)


class ClientSession:
    """One connection to a curriculum server.

    `step` mirrors the engine step the server last acknowledged; it is
    set by the hello exchange and advances only on ack.  At most one
    batch is outstanding at a time.
    """

    def __init__(self, reader, writer, proc=None, record=None):
        self._reader = reader
        self._writer = writer
        self._proc = proc
        self._closed = False
        # When a list is passed, every line is appended as ("send", line)
        # or ("recv", line) for record/replay testing.
        self.transcript = record
        self.version: str | None = None
        self.step: int = 0
        self.batch_size: int | None = None
        self.registry_sha256: str | None = None
        self.pending: list[tuple[str, str]] | None = None

    # -- transport ------------------------------------------------------------

    def _send(self, obj: dict) -> None:
        if self._closed:
            raise SessionClosed("session is closed")
        line = wire.emit_line(obj)
        try:
            self._writer.write(line)
            self._writer.flush()
        except (OSError, ValueError) as exc:
            self._closed = True
            raise SessionClosed(f"connection lost while sending: {exc}") from exc
        if self.transcript is not None:
            self.transcript.append(("send", line))

    def _recv(self) -> dict:
        while True:
            try:
                line = self._reader.readline()
            except (OSError, ValueError) as exc:
                self._closed = True
                raise SessionClosed(f"connection lost while reading: {exc}") from exc
            if line == "":
                self._closed = True
                raise SessionClosed("server closed the connection")
            if line.strip() == "":
                continue
            if self.transcript is not None:
                self.transcript.append(("recv", line))
            return wire.parse_reply(line)

    def _rpc(self, obj: dict, expect: str) -> dict:
        self._send(obj)
        reply = self._recv()
        if reply["kind"] == "error":
            # The server closes after an error reply; acknowledged state
            # survives server-side, so the caller can reconnect.
            self._closed = True
            if reply["code"] == "version-mismatch":
                raise VersionError(reply["message"])
            raise ServerError(reply["code"], reply["message"], reply["step"])
        if reply["kind"] != expect:
            raise MalformedReply(f"expected {expect} reply, got {reply['kind']}")
        return reply

    # -- protocol operations ----------------------------------------------------

    def _hello(self, version: str) -> None:
        reply = self._rpc(wire.hello_request(version), "hello")
        self.version = reply["version"]
        self.step = reply["step"]
        self.batch_size = reply["batch_size"]
        self.registry_sha256 = reply["registry_sha256"]

    def next_batch(self) -> list[tuple[str, str]]:
        """Fetch this step's batch as (problem_id, category) pairs."""
        if self.pending is not None:
            raise OrderingError(
                f"step {self.step} already has an outstanding batch; report it first"
            )
        reply = self._rpc(wire.get_batch_request(self.step), "batch")
        if reply["step"] != self.step:
            raise MalformedReply(
                f"batch for step {reply['step']}, session is at {self.step}"
            )
        if self.batch_size is not None and len(reply["entries"]) != self.batch_size:
            raise MalformedReply(
                f"batch has {len(reply['entries'])} entries, expected {self.batch_size}"
            )
        self.pending = [(pid, category) for pid, category in reply["entries"]]
        return list(self.pending)

    def report_advantages(self, values: Mapping[str, float]) -> None:
        """Deliver one mean absolute advantage per distinct batch problem."""
        if self.pending is None:
            raise OrderingError("no batch outstanding; call next_batch first")
        expected = list(dict.fromkeys(pid for pid, _ in self.pending))
        missing = [pid for pid in expected if pid not in values]
        if missing:
            raise PartialReport(missing)
        # Extra ids are sent through; the server rejects them, which is
        # the authoritative answer on what was in the batch.
        extras = sorted(set(values) - set(expected))
        pairs = [(pid, values[pid]) for pid in expected + extras]
        reply = self._rpc(wire.report_request(self.step, pairs), "ack")
        if reply["step"] != self.step:
            raise MalformedReply(
                f"ack for step {reply['step']}, session is at {self.step}"
            )
        self.step += 1
        self.pending = None

    def snapshot(self) -> list[tuple[str, float]]:
        """Current Q vector in registry category order."""
        reply = self._rpc(wire.snapshot_request(self.step), "snapshot-reply")
        return [(category, float(v)) for category, v in reply["q"]]

    # -- lifecycle --------------------------------------------------------------

    def close(self) -> None:
        if not self._closed:
            self._closed = True
        for stream in (self._writer, self._reader):
            try:
                stream.close()
            except (OSError, ValueError):
                pass
        if self._proc is not None:
            try:
                self._proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "ClientSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def connect(
    endpoint: str | Iterable[str],
    version: str = wire.VERSION,
    record: list | None = None,
) -> ClientSession:
    """Open a session and complete the hello exchange.

    `endpoint` is either "tcp:HOST:PORT" or a server command (string or
    argv list) to spawn and talk to over its stdio.
    """
    if isinstance(endpoint, str) and endpoint.startswith("tcp:"):
        _, _, rest = endpoint.partition(":")
        host, sep, port = rest.rpartition(":")
        if not sep or not port.isdigit():
            raise ConnectError(f"bad tcp endpoint {endpoint!r}, want tcp:HOST:PORT")
        try:
            conn = socket.create_connection((host, int(port)), timeout=30)
        except OSError as exc:
            raise ConnectError(f"cannot connect to {endpoint}: {exc}") from exc
        stream = conn.makefile("rw", encoding="utf-8", newline="\n")
        conn.close()  # the makefile keeps the socket alive until closed
        session = ClientSession(stream, stream, record=record)
    else:
        argv = shlex.split(endpoint) if isinstance(endpoint, str) else list(endpoint)
        try:
            proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ConnectError(f"cannot start {argv!r}: {exc}") from exc
        session = ClientSession(proc.stdout, proc.stdin, proc=proc, record=record)
    try:
        session._hello(version)
    except Exception:
        session.close()
        raise
    return session
