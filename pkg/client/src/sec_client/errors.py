"""Typed client-side failures.

Everything the session can raise derives from ClientError, split by who
is at fault: the caller (ordering, coverage), the server (error replies,
malformed output), or the transport (connect, unexpected close).
"""


class ClientError(Exception):
    """Base class for every failure raised by this package."""


class ConnectError(ClientError):
    """The endpoint could not be reached or the process could not start."""


class VersionError(ClientError):
    """The server rejected the protocol version offered at hello."""


class OrderingError(ClientError):
    """Request out of sequence: double fetch, or report with no batch."""


class PartialReport(ClientError):
    """The report does not cover every problem in the outstanding batch."""

    def __init__(self, missing_ids):
        self.missing_ids = tuple(missing_ids)
        super().__init__(
            f"report is missing {len(self.missing_ids)} batch problem(s): "
            + ", ".join(self.missing_ids)
        )


class ServerError(ClientError):
    """The server answered with an error reply and closed the connection."""

    def __init__(self, code: str, message: str, step: int):
        self.code = code
        self.message = message
        self.step = step
        super().__init__(f"{code}: {message}")


class MalformedReply(ClientError):
    """The server sent something outside the documented reply grammar."""


class SessionClosed(ClientError):
    """The connection ended while a reply was expected."""
