"""Newline-delimited wire protocol on stdin/stdout, one session per process.

Malformed lines produce an ``error`` message echoing the input and the
session continues. The process exits after ``trial_done``, whose JSON line
is the machine-readable summary.
"""

from __future__ import annotations

import sys

from .protocol import EngineSettings, SessionEngine, load_settings
from .records import save_record


def serve_stdio(config_path: str | None = None, settings: EngineSettings | None = None,
                stdin=None, stdout=None) -> int:
    """Serve one session; returns the process exit status."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    settings = settings or load_settings(config_path)
    engine = SessionEngine(settings)
    for line in stdin:
        for msg in engine.handle_line(line):
            stdout.write(msg.encode() + "\n")
        stdout.flush()
        if engine.done:
            break
    if engine.record is not None and settings.record_dir:
        _persist(engine, settings.record_dir)
    return 0 if engine.done else 1


def _persist(engine: SessionEngine, record_dir: str) -> None:
    import os
    os.makedirs(record_dir, exist_ok=True)
    record = engine.discovery if engine.discovery is not None else engine.record
    name = engine.session_id.replace(":", "_").replace("/", "_") or "session"
    save_record(os.path.join(record_dir, f"{name}.json"), record)
