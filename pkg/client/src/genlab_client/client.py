"""Session client: open an episode, run experiments, answer queries.

Domain rejections (invalid designs) are returned as values, never raised;
transport failures and protocol violations raise. One request is in flight
per session at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .transport import HttpTransport, StdioTransport
from .wire import (
    SCHEMA_VERSION,
    Message,
    ProtocolError,
    VersionMismatchError,
    make_message,
)


class EngineError(RuntimeError):
    """The engine answered with an error message."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class ExperimentResult:
    value: object
    text: str
    step: int
    meta: dict


@dataclass(frozen=True)
class InvalidDesign:
    reason: str
    retries_left: int


@dataclass
class QueryBatch:
    checkpoint: int
    phase: str
    queries: list
    explanation: str | None = None
    framing: str | None = None


@dataclass
class SessionClient:
    transport: object
    session_id: str = ""
    description: dict = field(default_factory=dict)
    pending: QueryBatch | None = None
    done: bool = False
    result: dict | None = None          # trial_done payload
    awaiting_explanation: bool = False
    explanation_truncated: bool = False
    _busy: bool = False

    # -- derived accessors ---------------------------------------------------
    @property
    def framing(self) -> str:
        return self.description.get("framing", "")

    @property
    def design_space(self) -> dict:
        return self.description.get("design_space", {})

    @property
    def checkpoints(self) -> list:
        return [int(c) for c in self.description.get("checkpoints", [])]

    @property
    def mode(self) -> str:
        return self.description.get("mode", "trial")

    @property
    def explanation_budget(self) -> int:
        return int(self.description.get("explanation_budget", 2000))

    @property
    def steps_done(self) -> int:
        return self._steps

    # -- plumbing ----------------------------------------------------------------
    def _roundtrip(self, msg: Message, expect: int) -> list[Message]:
        if self._busy:
            raise ProtocolError("one request may be in flight per session")
        self._busy = True
        try:
            msgs = self.transport.roundtrip(msg, expect)
        finally:
            self._busy = False
        for m in msgs:
            if m.schema_version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
                raise VersionMismatchError(
                    f"engine speaks {m.schema_version}, client speaks {SCHEMA_VERSION}")
        return msgs

    def _absorb(self, msgs: list[Message]) -> None:
        for m in msgs:
            if m.type == "error":
                raise EngineError(m.payload.get("code", "error"),
                                  m.payload.get("message", ""))
            if m.type == "query_batch":
                self.pending = QueryBatch(
                    checkpoint=int(m.payload["checkpoint"]),
                    phase=m.payload.get("phase", "scientist"),
                    queries=list(m.payload["queries"]),
                    explanation=m.payload.get("explanation"),
                    framing=m.payload.get("framing"),
                )
            elif m.type == "explain_request":
                self.awaiting_explanation = True
            elif m.type == "trial_done":
                self.done = True
                self.result = m.payload
            elif m.type == "experiment_result":
                self._steps = int(m.payload.get("step", self._steps + 1))

    # -- session operations ---------------------------------------------------------
    def step_experiment(self, design: dict, token: str | None = None):
        """Run one experiment; returns ExperimentResult or InvalidDesign."""
        if self.done:
            raise ProtocolError("session is finished")
        payload = {"design": design}
        if token is not None:
            payload["token"] = token
        msgs = self._roundtrip(make_message("experiment_request", self.session_id, payload), 1)
        head, rest = msgs[0], msgs[1:]
        if head.type == "invalid_design":
            self._absorb(rest)
            retries_left = int(head.payload.get("retries_left", 0))
            if retries_left <= 0 and not rest:
                # retry exhaustion: the engine follows with trial_done
                self._absorb(self.transport.read_extra(1))
            return InvalidDesign(reason=head.payload["reason"], retries_left=retries_left)
        if head.type == "experiment_result":
            self._absorb([head])
            self._absorb(rest)
            # a checkpoint hit brings a query_batch along
            if self._steps in self.checkpoints and self.pending is None:
                self._absorb(self.transport.read_extra(1))
            return ExperimentResult(value=head.payload["value"],
                                    text=head.payload.get("text", ""),
                                    step=int(head.payload["step"]),
                                    meta=head.payload.get("meta", {}))
        self._absorb(msgs)
        raise ProtocolError(f"unexpected reply to experiment_request: {head.type}")

    def submit_predictions(self, predictions: list) -> None:
        if self.pending is None:
            raise ProtocolError("no query batch is outstanding")
        batch = self.pending
        if len(predictions) != len(batch.queries):
            raise ProtocolError(
                f"need {len(batch.queries)} predictions, got {len(predictions)}")
        later = [c for c in self.checkpoints if c > batch.checkpoint]
        if batch.phase == "novice":
            expect = 1          # trial_done
        elif later:
            expect = 0          # proceed with experiments
        else:
            expect = 1          # trial_done or explain_request
        self.pending = None
        msgs = self._roundtrip(make_message(
            "prediction_batch", self.session_id,
            {"checkpoint": batch.checkpoint, "predictions": list(predictions)}), expect)
        self._absorb(msgs)

    def submit_explanation(self, text: str) -> str:
        """Sends the explanation, pre-truncated to the budget; returns the
        text actually sent."""
        if not self.awaiting_explanation:
            raise ProtocolError("engine has not requested an explanation")
        budget = self.explanation_budget
        if len(text) > budget:
            text = text[:budget]
            self.explanation_truncated = True
        self.awaiting_explanation = False
        msgs = self._roundtrip(make_message("explanation", self.session_id,
                                            {"text": text}), 1)
        self._absorb(msgs)
        return text

    def record(self) -> dict | None:
        """The trial record: from trial_done, or the HTTP record endpoint."""
        if self.result is not None:
            return self.result.get("record")
        return self.transport.fetch_record()

    def close(self) -> None:
        self.transport.close()

    def __post_init__(self):
        self._steps = 0


def open_session(target, env_id: str, goal_id: str, seed: int,
                 prior_mode: bool = True, identity: str = "client",
                 mode: str = "trial", run_index: int = 0,
                 checkpoints: list | None = None,
                 queries_per_checkpoint: int | None = None,
                 explanation_budget: int | None = None,
                 novice_identity: str | None = None,
                 variant: str | None = None, params: dict | None = None,
                 timeout_s: float = 120.0) -> SessionClient:
    """Open a session against ``target``.

    ``target`` is an HTTP base URL (``http://...``), an argv list for a
    stdio engine subprocess, or an existing transport object.
    """
    if isinstance(target, str) and target.startswith("http"):
        transport = HttpTransport(target, timeout_s=timeout_s)
    elif isinstance(target, (list, tuple)):
        transport = StdioTransport(list(target), timeout_s=timeout_s)
    else:
        transport = target

    payload = {
        "env": env_id,
        "goal": goal_id,
        "seed": int(seed),
        "run_index": int(run_index),
        "identity": identity,
        "mode": mode,
        "prior_mode": bool(prior_mode),
    }
    if checkpoints is not None:
        payload["checkpoints"] = [int(c) for c in checkpoints]
    if queries_per_checkpoint is not None:
        payload["queries_per_checkpoint"] = int(queries_per_checkpoint)
    if explanation_budget is not None:
        payload["explanation_budget"] = int(explanation_budget)
    if novice_identity is not None:
        payload["novice_identity"] = novice_identity
    if variant:
        payload["variant"] = variant
    if params:
        payload["params"] = params

    client = SessionClient(transport=transport)
    msgs = client._roundtrip(make_message("hello", "", payload), 1)
    head = msgs[0]
    if head.type == "error":
        transport.close()
        if head.payload.get("code") == "version-mismatch":
            raise VersionMismatchError(head.payload.get("message", ""))
        raise EngineError(head.payload.get("code", "error"),
                          head.payload.get("message", ""))
    if head.type != "env_description":
        transport.close()
        raise ProtocolError(f"expected env_description, got {head.type}")
    client.session_id = head.session
    client.description = dict(head.payload)
    client._absorb(msgs[1:])
    # checkpoint 0 queries ride along with the description
    if 0 in client.checkpoints and client.pending is None:
        client._absorb(transport.read_extra(1))
    return client
