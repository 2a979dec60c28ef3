"""Sidecar server: one engine, one client at a time, line protocol.

The server owns the Engine exclusively.  Connections come and go (a
protocol error closes the current one; the engine keeps all state from
acknowledged steps), and an unreported batch survives both disconnects
and checkpoint/restore, so a reconnecting trainer that re-requests the
current step gets the identical batch back.

If a checkpoint path is configured, state is saved whenever a
connection ends, including on protocol-error closes and EOF.
"""

from __future__ import annotations

import socket
import sys
from typing import Callable, Iterable, TextIO

from .bandit import BanditConfig
from .categories import Registry
from .engine import Engine
from .errors import BadConfig, ProtocolError
from .protocol import (
    REQUEST_KINDS,
    VERSION,
    ack_reply,
    batch_reply,
    error_reply,
    hello_reply,
    parse_message,
    parse_report_values,
    snapshot_reply,
)
from .serialize import emit_line


class SidecarServer:
    def __init__(
        self,
        registry: Registry,
        config: BanditConfig,
        log_stream: TextIO | None = None,
        checkpoint_path: str | None = None,
        restore_path: str | None = None,
    ):
        self.registry = registry
        if restore_path is not None:
            self.engine = Engine.restore(restore_path, registry, log_stream=log_stream)
        else:
            self.engine = Engine(registry, config, log_stream=log_stream)
        self.checkpoint_path = checkpoint_path
        self._greeted = False

    # -- state machine ------------------------------------------------------

    def begin_connection(self) -> None:
        self._greeted = False

    def handle_line(self, line: str) -> tuple[str, bool]:
        """Process one request line; returns (reply line, close flag)."""
        try:
            obj = parse_message(line)
            kind = obj["kind"]
            if kind not in REQUEST_KINDS:
                raise ProtocolError("malformed", f"{kind!r} is not a request kind")
            if kind == "hello":
                reply = self._hello(obj)
            elif not self._greeted:
                raise ProtocolError("state", "hello required before anything else")
            elif kind == "get-batch":
                reply = self._get_batch(obj)
            elif kind == "report":
                reply = self._report(obj)
            else:
                reply = self._snapshot(obj)
            return emit_line(reply), False
        except ProtocolError as exc:
            reply = error_reply(self.engine.step_index, exc.code, exc.message)
            return emit_line(reply), True

    def _hello(self, obj: dict) -> dict:
        version = obj.get("version")
        if version != VERSION:
            raise ProtocolError(
                "version-mismatch", f"server speaks {VERSION}, client sent {version!r}"
            )
        self._greeted = True
        return hello_reply(
            self.engine.step_index,
            self.engine.config.batch_size,
            self.registry.sha256(),
        )

    def _check_step(self, obj: dict) -> int:
        step = obj["step"]
        if step != self.engine.step_index:
            raise ProtocolError(
                "step-mismatch",
                f"engine is at step {self.engine.step_index}, request says {step}",
            )
        return step

    def _get_batch(self, obj: dict) -> dict:
        step = self._check_step(obj)
        batch = self.engine.begin_step()
        return batch_reply(step, batch.entries)

    def _report(self, obj: dict) -> dict:
        step = self._check_step(obj)
        if self.engine.pending is None:
            raise ProtocolError("state", f"no batch was issued for step {step}")
        unique_ids = list(dict.fromkeys(pid for pid, _ in self.engine.pending.entries))
        values = parse_report_values(obj, unique_ids)
        record = self.engine.complete_step(values)
        return ack_reply(record.step)

    def _snapshot(self, obj: dict) -> dict:
        step = self._check_step(obj)
        return snapshot_reply(step, self.engine.policy.q_items())

    # -- transports ---------------------------------------------------------

    def maybe_checkpoint(self) -> None:
        if self.checkpoint_path is not None:
            self.engine.checkpoint(self.checkpoint_path)

    def run_connection(self, reader: Iterable[str], writer: TextIO) -> None:
        """Serve one connection until EOF or a protocol-error close."""
        self.begin_connection()
        try:
            for line in reader:
                if not line.strip():
                    continue
                reply, close = self.handle_line(line)
                writer.write(reply)
                writer.flush()
                if close:
                    break
        finally:
            self.maybe_checkpoint()

    def serve_stdio(self, reader: TextIO | None = None, writer: TextIO | None = None) -> None:
        self.run_connection(
            reader if reader is not None else sys.stdin,
            writer if writer is not None else sys.stdout,
        )

    def serve_tcp(
        self,
        port: int,
        max_connections: int | None = None,
        ready_callback: Callable[[int], None] | None = None,
    ) -> None:
        with socket.create_server(("127.0.0.1", port)) as listener:
            if ready_callback is not None:
                ready_callback(listener.getsockname()[1])
            served = 0
            while max_connections is None or served < max_connections:
                conn, _ = listener.accept()
                with conn, conn.makefile("rw", encoding="utf-8", newline="\n") as stream:
                    self.run_connection(stream, stream)
                served += 1


def serve(
    registry: Registry,
    config: BanditConfig,
    transport: str = "stdio",
    log_stream: TextIO | None = None,
    checkpoint_path: str | None = None,
    restore_path: str | None = None,
    max_connections: int | None = None,
) -> None:
    """Run the sidecar until EOF (stdio) or forever (tcp).

    transport is "stdio" or "tcp:PORT"; PORT 0 picks a free port (its
    number is printed to stderr).
    """
    server = SidecarServer(
        registry,
        config,
        log_stream=log_stream,
        checkpoint_path=checkpoint_path,
        restore_path=restore_path,
    )
    if transport == "stdio":
        server.serve_stdio()
        return
    if transport.startswith("tcp:"):
        try:
            port = int(transport[4:])
        except ValueError:
            raise BadConfig(f"bad tcp port in transport {transport!r}") from None
        server.serve_tcp(
            port,
            max_connections=max_connections,
            ready_callback=lambda p: print(f"listening on 127.0.0.1:{p}", file=sys.stderr),
        )
        return
    raise BadConfig(f"unknown transport {transport!r}; use stdio or tcp:PORT")
