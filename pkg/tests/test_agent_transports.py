"""run_trial driving remote agents over the stdio and http transports."""

import json
import os
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from genlab.agents import CallbackAgent
from genlab.envs import default_config
from genlab.harness import AgentHandle, agent_handle, run_trial
from genlab.protocol import EngineSettings
from genlab.records import record_equal

FAST = EngineSettings(prior_stats_samples=400)
AGENT_SCRIPT = os.path.join(os.path.dirname(__file__), "stdio_mu0_agent.py")


def _reference_record():
    agent = CallbackAgent(on_design=lambda a, s, h: {"t": 1.0},
                          on_predict=lambda a, q: a.info.stats.mu0,
                          identity="remote_mu0")
    return run_trial(default_config("death_process"), "num_infected",
                     agent_handle(agent), checkpoints=(0, 1, 3),
                     queries_per_checkpoint=2, master_seed=15, settings=FAST)


def test_stdio_agent_transport_matches_in_process():
    handle = AgentHandle(transport="stdio", identity="remote_mu0",
                         command=[sys.executable, AGENT_SCRIPT], timeout_s=30)
    rec = run_trial(default_config("death_process"), "num_infected", handle,
                    checkpoints=(0, 1, 3), queries_per_checkpoint=2,
                    master_seed=15, settings=FAST)
    assert not rec.incomplete
    assert record_equal(rec.to_jsonable(), _reference_record().to_jsonable())


class _AgentHandler(BaseHTTPRequestHandler):
    mu0 = None
    session = ""

    def log_message(self, *a):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        batch = json.loads(self.rfile.read(length))["messages"]
        reply = None
        session = type(self).session
        for m in batch:
            session = m.get("session", session)
            type(self).session = session
            payload = m.get("payload", {})
            if m["type"] == "env_description":
                type(self).mu0 = payload["mu0"]
            if m["type"] == "query_batch":
                reply = {"type": "prediction_batch", "session": session, "step": 0,
                         "schema_version": "1.0",
                         "payload": {"checkpoint": payload["checkpoint"],
                                     "predictions": [type(self).mu0] * len(payload["queries"])}}
        if reply is None:
            reply = {"type": "experiment_request", "session": session, "step": 0,
                     "schema_version": "1.0", "payload": {"design": {"t": "1.0"}}}
        body = json.dumps({"message": reply}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def test_http_agent_transport_matches_in_process():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _AgentHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    host, port = server.server_address[:2]
    try:
        handle = AgentHandle(transport="http", identity="remote_mu0",
                             url=f"http://{host}:{port}/agent", timeout_s=30)
        rec = run_trial(default_config("death_process"), "num_infected", handle,
                        checkpoints=(0, 1, 3), queries_per_checkpoint=2,
                        master_seed=15, settings=FAST)
        assert not rec.incomplete
        assert record_equal(rec.to_jsonable(), _reference_record().to_jsonable())
    finally:
        server.shutdown()
        server.server_close()
