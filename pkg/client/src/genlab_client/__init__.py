"""Thin client SDK for the genlab wire protocol.

Connects LLM-based or scripted agents to a genlab engine over stdio or
HTTP. The SDK contains zero model-vendor code; callers supply callbacks.
For deterministic engine runs, drive decoding with temperature 0 and keep
per-call outputs short; the engine's own replay guarantees cover everything
on its side of the wire.
"""

from .adapter import AdapterOutcome, AgentAdapter, NoviceAdapter, agent_adapter, novice_adapter
from .client import (
    EngineError,
    ExperimentResult,
    InvalidDesign,
    QueryBatch,
    SessionClient,
    open_session,
)
from .rng import Stream
from .transport import HttpTransport, StdioTransport, TransportError
from .wire import (
    SCHEMA_VERSION,
    Message,
    ProtocolError,
    VersionMismatchError,
    canonical,
    parse_number,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterOutcome", "AgentAdapter", "NoviceAdapter", "agent_adapter",
    "novice_adapter", "EngineError", "ExperimentResult", "InvalidDesign",
    "QueryBatch", "SessionClient", "open_session", "Stream", "HttpTransport",
    "StdioTransport", "TransportError", "SCHEMA_VERSION", "Message",
    "ProtocolError", "VersionMismatchError", "canonical", "parse_number",
]
