"""Reference client for the sec/1 curriculum sidecar protocol.

`connect` opens a session to a server (spawned over stdio or reached
over TCP), `ClientSession` exposes the protocol's four operations, and
`ToyLearner` is a runnable stand-in trainer; `sec-client-example` wires
them together.  The package speaks the documented wire grammar only and
shares no code with the server.
"""

from .errors import (
    ClientError,
    ConnectError,
    MalformedReply,
    OrderingError,
    PartialReport,
    ServerError,
    SessionClosed,
    VersionError,
)
from .session import ClientSession, connect
from .toy import ToyLearner, ToyScenario, load_toy_scenario
from .wire import VERSION

__version__ = "0.1.0"

__all__ = [
    "VERSION",
    "ClientError",
    "ClientSession",
    "ConnectError",
    "MalformedReply",
    "OrderingError",
    "PartialReport",
    "ServerError",
    "SessionClosed",
    "ToyLearner",
    "ToyScenario",
    "VersionError",
    "connect",
    "load_toy_scenario",
]
