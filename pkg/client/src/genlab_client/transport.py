"""Transports: a stdio subprocess engine or an HTTP session service.

Both record a transcript of canonical message lines (("send" | "recv"),
line) so conformance against golden fixtures is byte-for-byte.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
import urllib.error
import urllib.request

from .wire import Message


class TransportError(RuntimeError):
    pass


class StdioTransport:
    """Spawns the engine (e.g. ``["genlab", "serve-stdio"]``) and speaks
    newline-delimited messages on its pipes.

    A reader thread feeds a queue so timeouts work even when the text layer
    has buffered more than one line ahead of the OS pipe.
    """

    def __init__(self, command: list, timeout_s: float = 120.0):
        self.command = list(command)
        self.timeout_s = timeout_s
        self.transcript: list = []
        self.proc = subprocess.Popen(self.command, stdin=subprocess.PIPE,
                                     stdout=subprocess.PIPE, text=True, bufsize=1)
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self) -> None:
        for raw in self.proc.stdout:
            self._lines.put(raw.rstrip("\n"))
        self._lines.put(None)

    def _next_line(self) -> str:
        try:
            raw = self._lines.get(timeout=self.timeout_s)
        except queue.Empty:
            raise TransportError("timed out waiting for the engine") from None
        if raw is None:
            raise TransportError("engine closed its stdout")
        return raw

    def roundtrip(self, msg: Message, expect: int) -> list[Message]:
        line = msg.encode()
        self.transcript.append(("send", line))
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError) as e:
            raise TransportError(f"engine process is gone: {e}") from e
        return self.read_extra(expect)

    def read_extra(self, n: int) -> list[Message]:
        """Read ``n`` more engine messages (e.g. trial_done after a final
        invalid_design)."""
        out = []
        for _ in range(n):
            raw = self._next_line()
            self.transcript.append(("recv", raw))
            out.append(Message.decode(raw))
        return out

    def fetch_record(self):
        return None    # stdio carries the record inside trial_done

    def close(self) -> None:
        if self.proc.stdin and not self.proc.stdin.closed:
            self.proc.stdin.close()
        try:
            self.proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.proc.kill()


class HttpTransport:
    """Talks to ``genlab serve-http``; the embedded messages are identical
    to the stdio lines."""

    _ENDPOINTS = {
        "hello": "/v1/sessions",
        "experiment_request": "/v1/sessions/{sid}/experiment",
        "prediction_batch": "/v1/sessions/{sid}/predictions",
        "explanation": "/v1/sessions/{sid}/explanation",
    }

    def __init__(self, base_url: str, timeout_s: float = 120.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self.transcript: list = []
        self.session_id: str | None = None
        self._pending: list[Message] = []

    def _post(self, path: str, body: dict) -> dict:
        req = urllib.request.Request(self.base_url + path,
                                     data=json.dumps(body).encode("utf-8"),
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as e:
            detail = e.read().decode("utf-8", "replace")[:300]
            raise TransportError(f"engine returned HTTP {e.code}: {detail}") from e
        except OSError as e:
            raise TransportError(f"engine unreachable: {e}") from e

    def roundtrip(self, msg: Message, expect: int) -> list[Message]:
        path = self._ENDPOINTS[msg.type]
        if "{sid}" in path:
            path = path.format(sid=self.session_id)
        line = msg.encode()
        self.transcript.append(("send", line))
        out = self._post(path, json.loads(line))
        if msg.type == "hello":
            self.session_id = out.get("session")
        msgs = []
        for obj in out.get("messages", []):
            raw = json.dumps(obj, sort_keys=True, separators=(",", ":"))
            self.transcript.append(("recv", raw))
            msgs.append(Message.decode(raw))
        self._pending = []
        return msgs

    def read_extra(self, n: int) -> list[Message]:
        return []      # HTTP replies arrive complete in the POST response

    def fetch_record(self) -> dict | None:
        req = urllib.request.Request(
            f"{self.base_url}/v1/sessions/{self.session_id}/record")
        with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
            return json.loads(resp.read().decode("utf-8")).get("record")

    def close(self) -> None:
        pass
