"""Canonical wire encoding, mirroring the engine byte-for-byte.

Floats become shortest-roundtrip decimal strings; objects serialize with
sorted keys and compact separators, so client transcripts can be compared
against golden fixtures byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

SCHEMA_VERSION = "1.0"

MESSAGE_TYPES = (
    "hello", "env_description", "experiment_request", "experiment_result",
    "invalid_design", "query_batch", "prediction_batch", "explain_request",
    "explanation", "trial_done", "error",
)


class ProtocolError(ValueError):
    pass


class VersionMismatchError(ProtocolError):
    pass


def jsonable(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        return repr(obj)
    if isinstance(obj, str) or obj is None:
        return obj
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    raise TypeError(f"cannot serialize {type(obj)!r}")


def canonical(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"))


def parse_number(x) -> float:
    if isinstance(x, bool):
        raise ValueError("expected a number, got a bool")
    return float(x)


@dataclass(frozen=True)
class Message:
    type: str
    session: str
    step: int
    payload: dict
    schema_version: str = SCHEMA_VERSION

    def encode(self) -> str:
        return canonical({"type": self.type, "session": self.session,
                          "step": self.step, "schema_version": self.schema_version,
                          "payload": self.payload})

    @staticmethod
    def decode(line: str) -> "Message":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"malformed JSON from engine: {e}") from None
        if not isinstance(obj, dict) or obj.get("type") not in MESSAGE_TYPES:
            raise ProtocolError(f"unexpected wire object: {line[:200]}")
        return Message(
            type=obj["type"],
            session=str(obj.get("session", "")),
            step=int(obj.get("step", 0)),
            payload=obj.get("payload", {}),
            schema_version=str(obj.get("schema_version", SCHEMA_VERSION)),
        )


def make_message(mtype: str, session: str, payload: dict) -> Message:
    return Message(mtype, session, 0, jsonable(payload))
