"""Session-scoped HTTP service over the same wire messages.

Endpoints (bodies are WireMessage JSON objects; responses wrap the engine's
reply list as {"messages": [...]}):

    POST /v1/sessions                    hello             -> create session
    POST /v1/sessions/{id}/experiment    experiment_request
    GET  /v1/sessions/{id}/queries       re-fetch the outstanding query_batch
    POST /v1/sessions/{id}/predictions   prediction_batch
    POST /v1/sessions/{id}/explanation   explanation
    GET  /v1/sessions/{id}/record        current record snapshot
    GET  /v1/meta                        schema version and environments

Sessions are processed strictly serially under a per-session lock; distinct
sessions are independent. Experiment posts may carry a ``token`` payload
field for idempotent retries.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .envs import env_ids
from .protocol import EngineSettings, SessionEngine, WireMessage, load_settings
from .records import SCHEMA_VERSION, jsonable


class SessionStore:
    def __init__(self, settings: EngineSettings):
        self.settings = settings
        self._lock = threading.Lock()
        self._sessions: dict[str, tuple[SessionEngine, threading.Lock]] = {}
        self._last_queries: dict[str, dict] = {}

    def create(self, hello: WireMessage) -> tuple[str, list[WireMessage]]:
        engine = SessionEngine(self.settings)
        msgs = engine.handle(hello)
        sid = engine.session_id
        if sid:
            with self._lock:
                if sid in self._sessions:
                    return sid, [engine._error("duplicate-session",
                                               f"session {sid!r} already exists")]
                self._sessions[sid] = (engine, threading.Lock())
                self._remember_queries(sid, msgs)
        return sid, msgs

    def dispatch(self, sid: str, msg: WireMessage) -> list[WireMessage]:
        with self._lock:
            entry = self._sessions.get(sid)
        if entry is None:
            raise KeyError(sid)
        engine, lock = entry
        with lock:
            msgs = engine.handle(msg)
            self._remember_queries(sid, msgs)
            return msgs

    def queries(self, sid: str) -> dict | None:
        with self._lock:
            if sid not in self._sessions:
                raise KeyError(sid)
        return self._last_queries.get(sid)

    def record(self, sid: str) -> dict:
        with self._lock:
            entry = self._sessions.get(sid)
        if entry is None:
            raise KeyError(sid)
        engine, lock = entry
        with lock:
            rec = engine.discovery if engine.discovery is not None else engine.record
            return jsonable(rec.to_jsonable()) if rec is not None else {}

    def _remember_queries(self, sid: str, msgs: list[WireMessage]) -> None:
        for m in msgs:
            if m.type == "query_batch":
                self._last_queries[sid] = json.loads(m.encode())


def _wire_from_body(body: dict, expect_type: str | None = None) -> WireMessage:
    msg = WireMessage.decode(json.dumps(body))
    if expect_type and msg.type != expect_type:
        raise ValueError(f"endpoint expects a {expect_type!r} message, got {msg.type!r}")
    return msg


class _Handler(BaseHTTPRequestHandler):
    store: SessionStore = None  # set by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, obj: dict) -> None:
        body = json.dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b"{}"
        return json.loads(raw.decode("utf-8"))

    def _messages(self, msgs: list[WireMessage]) -> dict:
        return {"messages": [json.loads(m.encode()) for m in msgs]}

    def do_GET(self):
        parts = [p for p in self.path.split("/") if p]
        try:
            if parts == ["v1", "meta"]:
                self._send(200, {"schema_version": SCHEMA_VERSION, "envs": env_ids()})
            elif len(parts) == 4 and parts[:2] == ["v1", "sessions"] and parts[3] == "queries":
                q = self.store.queries(parts[2])
                self._send(200, {"messages": [q] if q else []})
            elif len(parts) == 4 and parts[:2] == ["v1", "sessions"] and parts[3] == "record":
                self._send(200, {"record": self.store.record(parts[2])})
            else:
                self._send(404, {"error": "unknown endpoint"})
        except KeyError:
            self._send(404, {"error": "unknown-session"})

    def do_POST(self):
        parts = [p for p in self.path.split("/") if p]
        try:
            body = self._read_body()
        except (ValueError, json.JSONDecodeError) as e:
            self._send(400, {"error": f"malformed body: {e}"})
            return
        try:
            if parts == ["v1", "sessions"]:
                msg = _wire_from_body(body, "hello")
                sid, msgs = self.store.create(msg)
                self._send(200, {"session": sid, **self._messages(msgs)})
                return
            if len(parts) == 4 and parts[:2] == ["v1", "sessions"]:
                sid, action = parts[2], parts[3]
                expect = {"experiment": "experiment_request",
                          "predictions": "prediction_batch",
                          "explanation": "explanation",
                          "messages": None}.get(action, "missing")
                if expect == "missing":
                    self._send(404, {"error": "unknown endpoint"})
                    return
                msg = _wire_from_body(body, expect)
                msgs = self.store.dispatch(sid, msg)
                self._send(200, self._messages(msgs))
                return
            self._send(404, {"error": "unknown endpoint"})
        except KeyError:
            self._send(404, {"error": "unknown-session"})
        except ValueError as e:
            self._send(400, {"error": str(e)})


def make_server(settings: EngineSettings | None = None,
                bind: str = "127.0.0.1:0") -> ThreadingHTTPServer:
    """Build (but do not run) the HTTP service; caller drives serve_forever."""
    host, _, port = bind.partition(":")
    handler = type("Handler", (_Handler,), {"store": SessionStore(settings or EngineSettings())})
    return ThreadingHTTPServer((host or "127.0.0.1", int(port or 0)), handler)


def serve_http(config_path: str | None = None, bind: str = "127.0.0.1:8800") -> None:
    settings = load_settings(config_path)
    server = make_server(settings, bind)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
