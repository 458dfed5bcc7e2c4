"""Persistent run artifacts: trial and discovery records, canonical JSON.

All floats serialize as shortest-roundtrip decimal strings so persisted
artifacts carry no cross-language float-text drift; replay compares records
byte-for-byte after dropping the wall-clock field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .envs import EnvConfig
from .evaluation import EigEstimate, PriorPredictiveStats

SCHEMA_VERSION = "1.0"


def jsonable(obj) -> Any:
    """Recursively convert to JSON-safe values; floats become decimal strings."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return repr(float(obj))
    if isinstance(obj, str) or obj is None:
        return obj
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if hasattr(obj, "to_jsonable"):
        return jsonable(obj.to_jsonable())
    raise TypeError(f"cannot serialize {type(obj)!r}")


def canonical_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":"))


def parse_number(x) -> float:
    """Read a wire numeric (decimal string or native number)."""
    if isinstance(x, bool):
        raise ValueError("expected a number, got a bool")
    return float(x)


def parse_value(x):
    """Read a wire value: number, decimal string, or list thereof."""
    if isinstance(x, (list, tuple)):
        return tuple(parse_number(v) for v in x)
    return parse_number(x)


@dataclass
class StepRecord:
    attempts: list = field(default_factory=list)   # rejected {"design", "reason"} dicts
    design: dict | None = None
    value: Any = None
    text: str = ""
    meta: dict = field(default_factory=dict)
    eig: EigEstimate | None = None

    def to_jsonable(self):
        return {
            "attempts": self.attempts,
            "design": self.design,
            "value": self.value,
            "text": self.text,
            "meta": self.meta,
            "eig": self.eig.to_jsonable() if self.eig else None,
        }


@dataclass
class CheckpointRecord:
    checkpoint: int
    queries: list
    predictions: list
    truths: list
    raw_errors: list
    standardized_error: float

    def to_jsonable(self):
        return {
            "checkpoint": self.checkpoint,
            "queries": self.queries,
            "predictions": self.predictions,
            "truths": self.truths,
            "raw_errors": self.raw_errors,
            "standardized_error": self.standardized_error,
        }


@dataclass
class TrialRecord:
    """Full provenance of one trial; replayable from its seed plan."""

    config: EnvConfig
    goal_id: str
    master_seed: int
    run_index: int
    agent_identity: str
    retry_limit: int
    checkpoints: tuple
    queries_per_checkpoint: int
    explanation_budget: int
    prior_stats: PriorPredictiveStats | None = None
    theta: dict = field(default_factory=dict)
    steps: list = field(default_factory=list)
    checkpoint_results: list = field(default_factory=list)
    incomplete: bool = False
    failure: str | None = None
    message_log: list = field(default_factory=list)
    wall_clock_s: float = 0.0

    def seed_plan(self) -> dict:
        """Named substream layout sufficient to re-derive every draw."""
        root = ["trial", self.run_index]
        return {
            "master_seed": self.master_seed,
            "trial_root": root,
            "episode": root + ["episode"],
            "theta": root + ["episode", "theta"],
            "observation_i": root + ["episode", "obs", "<i>"],
            "queries_checkpoint_c": root + ["queries", "<c>"],
            "novice_queries": root + ["novice_queries"],
            "agent": root + ["agent"],
            "prior_stats": ["prior_stats"],
        }

    def to_jsonable(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_jsonable(),
            "goal_id": self.goal_id,
            "master_seed": self.master_seed,
            "run_index": self.run_index,
            "agent_identity": self.agent_identity,
            "retry_limit": self.retry_limit,
            "checkpoints": list(self.checkpoints),
            "queries_per_checkpoint": self.queries_per_checkpoint,
            "explanation_budget": self.explanation_budget,
            "seed_plan": self.seed_plan(),
            "prior_stats": self.prior_stats.to_jsonable() if self.prior_stats else None,
            "theta": self.theta,
            "steps": [s.to_jsonable() for s in self.steps],
            "checkpoint_results": [c.to_jsonable() for c in self.checkpoint_results],
            "incomplete": self.incomplete,
            "failure": self.failure,
            "message_log": self.message_log,
            "wall_clock_s": self.wall_clock_s,
        }

    def errors_by_checkpoint(self) -> dict[int, float]:
        return {c.checkpoint: c.standardized_error for c in self.checkpoint_results}


@dataclass
class DiscoveryRecord:
    scientist: TrialRecord
    explanation: str
    explanation_budget: int
    truncated: bool
    novice_identity: str
    novice_queries: list = field(default_factory=list)
    novice_predictions: list = field(default_factory=list)
    novice_truths: list = field(default_factory=list)
    novice_error: float = 0.0
    scientist_final_error: float = 0.0
    novice_message_log: list = field(default_factory=list)

    def to_jsonable(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "scientist": self.scientist.to_jsonable(),
            "explanation": self.explanation,
            "explanation_budget": self.explanation_budget,
            "truncated": self.truncated,
            "novice_identity": self.novice_identity,
            "novice_queries": self.novice_queries,
            "novice_predictions": self.novice_predictions,
            "novice_truths": self.novice_truths,
            "novice_error": self.novice_error,
            "scientist_final_error": self.scientist_final_error,
            "novice_message_log": self.novice_message_log,
        }


def record_equal(a: dict, b: dict) -> bool:
    """Byte equality of two record JSON objects, ignoring wall-clock."""
    return _strip(a) == _strip(b)


def _strip(rec: dict) -> str:
    rec = json.loads(canonical_json(rec))
    rec.pop("wall_clock_s", None)
    if "scientist" in rec and isinstance(rec["scientist"], dict):
        rec["scientist"].pop("wall_clock_s", None)
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def save_record(path, record) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(record.to_jsonable() if hasattr(record, "to_jsonable") else record))
        fh.write("\n")


def load_record(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# --------------------------------------------------------------------------
# aggregate reporting

def _mean_se(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return math.nan, math.nan
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return float(arr.mean()), se


def aggregate_rows(trials: list[TrialRecord],
                   discoveries: list[DiscoveryRecord] | None = None) -> list[dict]:
    """Per (env, goal, agent): mean +/- s.e. of first/last checkpoint errors."""
    groups: dict[tuple, dict] = {}
    for t in trials:
        key = (t.config.env_id, t.goal_id, t.agent_identity)
        g = groups.setdefault(key, {"first": [], "last": [], "discovery": []})
        errs = t.errors_by_checkpoint()
        if errs:
            g["first"].append(errs[min(errs)])
            g["last"].append(errs[max(errs)])
    for d in (discoveries or []):
        t = d.scientist
        key = (t.config.env_id, t.goal_id, t.agent_identity)
        g = groups.setdefault(key, {"first": [], "last": [], "discovery": []})
        g["discovery"].append(d.novice_error)

    rows = []
    for (env_id, goal_id, agent), g in sorted(groups.items()):
        first = _mean_se(g["first"])
        last = _mean_se(g["last"])
        disc = _mean_se(g["discovery"]) if g["discovery"] else (math.nan, math.nan)
        rows.append({
            "env": env_id, "goal": goal_id, "agent": agent, "runs": len(g["first"]),
            "error_first_mean": first[0], "error_first_se": first[1],
            "error_last_mean": last[0], "error_last_se": last[1],
            "discovery_mean": disc[0], "discovery_se": disc[1],
        })
    return rows


def aggregate_table(trials: list[TrialRecord],
                    discoveries: list[DiscoveryRecord] | None = None,
                    first_label: str = "Error@0", last_label: str = "Error@10") -> str:
    rows = aggregate_rows(trials, discoveries)
    header = f"{'Env':<24} {'Goal':<18} {'Agent':<16} {'Runs':>4}  " \
             f"{first_label:>16}  {last_label:>16}  {'Discovery@10':>16}"
    lines = [header, "-" * len(header)]
    for r in rows:
        def fmt(mean, se):
            if math.isnan(mean):
                return f"{'-':>16}"
            return f"{mean:>8.2f} ± {se:<5.2f}"
        lines.append(
            f"{r['env']:<24} {r['goal']:<18} {r['agent']:<16} {r['runs']:>4}  "
            f"{fmt(r['error_first_mean'], r['error_first_se'])}  "
            f"{fmt(r['error_last_mean'], r['error_last_se'])}  "
            f"{fmt(r['discovery_mean'], r['discovery_se'])}")
    return "\n".join(lines)
