#!/usr/bin/env python3
"""Regenerate the golden wire transcripts in tests/golden/.

Each .jsonl file starts with a meta line carrying the engine settings, then
alternating {"send": line} / {"recv": line} entries, and ends with a
{"done": {...}} entry holding the trial_done summary and the record with the
wall-clock field stripped (the only nondeterministic byte).
"""

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from genlab.agents import CallbackAgent, baseline_agent
from genlab.envs import default_config
from genlab.harness import agent_handle, run_trial
from genlab.protocol import EngineSettings
from genlab.records import canonical_json

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "tests", "golden")

SETTINGS = EngineSettings(prior_stats_samples=400)


def transcript_from_record(rec, settings) -> list:
    entries = [{"meta": {"settings": settings.to_jsonable()}}]
    for e in rec.message_log:
        key = "send" if e["dir"] == "in" else "recv"
        entries.append({key: e["line"]})
    stripped = json.loads(canonical_json(rec.to_jsonable()))
    stripped.pop("wall_clock_s", None)
    summary = {"errors_by_checkpoint": {str(c.checkpoint): repr(float(c.standardized_error))
                                        for c in rec.checkpoint_results},
               "incomplete": rec.incomplete}
    entries.append({"done": {"summary": summary,
                             "record": json.dumps(stripped, sort_keys=True,
                                                  separators=(",", ":"))}})
    return entries


def write(name: str, entries: list) -> None:
    os.makedirs(OUT_DIR, exist_ok=True)
    path = os.path.join(OUT_DIR, name)
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n")
    print("wrote", path)


def golden_death_mu0():
    rec = run_trial(default_config("death_process"), "num_infected",
                    agent_handle(baseline_agent("mu0_predictor")),
                    checkpoints=(0, 1, 3), queries_per_checkpoint=3,
                    master_seed=7, run_index=0, settings=SETTINGS)
    assert not rec.incomplete
    write("death_mu0.jsonl", transcript_from_record(rec, SETTINGS))


def golden_hyperbolic_invalid():
    calls = {"n": 0}

    def designs(agent, step, history):
        calls["n"] += 1
        if calls["n"] == 1:
            return {"iR": 10.0, "dR": 10.0, "D": 30.0}   # rejected: iR == dR
        return {"iR": 10.0, "dR": 60.0, "D": 30.0}

    agent = CallbackAgent(on_design=designs, on_predict=lambda a, q: 0,
                          identity="golden_probe")
    rec = run_trial(default_config("hyperbolic_discounting"), "choice",
                    agent_handle(agent), checkpoints=(0, 1),
                    queries_per_checkpoint=2, master_seed=3, run_index=0,
                    settings=SETTINGS)
    assert not rec.incomplete
    assert rec.steps[0].attempts, "transcript must exercise invalid_design"
    write("hyperbolic_invalid.jsonl", transcript_from_record(rec, SETTINGS))


def golden_emotions_template():
    design = {"prizes": [50.0, 20.0, 10.0], "probs": [0.1, 0.4, 0.5], "outcome": 1}

    def predict(agent, q):
        return agent.info.stats.mu0

    agent = CallbackAgent(on_design=lambda a, s, h: dict(design),
                          on_predict=predict, identity="golden_emotions")
    rec = run_trial(default_config("emotions"), "emotion_likert",
                    agent_handle(agent), checkpoints=(0, 1),
                    queries_per_checkpoint=2, master_seed=5, run_index=0,
                    settings=SETTINGS)
    assert not rec.incomplete
    assert rec.steps[0].text.startswith("The player might be feeling")
    write("emotions_template.jsonl", transcript_from_record(rec, SETTINGS))


if __name__ == "__main__":
    golden_death_mu0()
    golden_hyperbolic_invalid()
    golden_emotions_template()
