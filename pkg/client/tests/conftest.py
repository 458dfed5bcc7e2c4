import json
import os
import sys
import tempfile
import threading

import pytest

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")

# Engine settings used by every conformance fixture (matches the goldens).
FAST_SETTINGS = {"prior_stats_samples": 400}


def engine_argv(config_path: str | None = None) -> list:
    argv = [sys.executable, "-m", "genlab", "serve-stdio"]
    if config_path:
        argv += ["--config", config_path]
    return argv


@pytest.fixture(scope="session")
def settings_path():
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(FAST_SETTINGS, fh)
        path = fh.name
    yield path
    os.unlink(path)


@pytest.fixture(scope="session")
def http_engine(settings_path):
    """A live HTTP engine with the conformance settings."""
    from genlab.http_server import make_server
    from genlab.protocol import EngineSettings

    server = make_server(EngineSettings.from_jsonable(FAST_SETTINGS), "127.0.0.1:0")
    host, port = server.server_address[:2]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()


def load_golden(name: str):
    path = os.path.join(GOLDEN_DIR, name)
    entries = [json.loads(line) for line in open(path, encoding="utf-8")]
    meta = entries[0]["meta"]
    sends = [e["send"] for e in entries[1:] if "send" in e]
    recvs = [e["recv"] for e in entries[1:] if "recv" in e]
    done = next(e["done"] for e in entries if "done" in e)
    return meta, sends, recvs, done
