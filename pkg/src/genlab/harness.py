"""Episode orchestration: trials, discovery episodes, and record replay.

``run_trial`` and ``run_discovery`` drive an agent through the same
``SessionEngine`` that backs the stdio and HTTP transports, so records are
transport-independent by construction. Agents attach through an
``AgentHandle``: in-process scripted objects, a subprocess speaking the wire
protocol on stdio, or an HTTP endpoint receiving engine messages.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
import time
import urllib.request
from dataclasses import dataclass, replace

from .agents import AgentInfo, ScriptedAgent, baseline_agent
from .envs import EnvConfig
from .protocol import EngineSettings, SessionEngine, WireMessage
from .records import DiscoveryRecord, TrialRecord, jsonable, record_equal
from .rng import RngState

DEFAULT_CHECKPOINTS = (0, 1, 3, 5, 7, 10)


class AgentCallError(RuntimeError):
    pass


@dataclass
class AgentHandle:
    """How the harness reaches an agent; every call is logged via the engine."""

    transport: str = "in_process"           # in_process | stdio | http
    identity: str = "agent"
    retry_limit: int = 3
    timeout_s: float = 120.0
    agent: ScriptedAgent | None = None      # in_process
    command: list | None = None             # stdio: argv of the agent process
    url: str | None = None                  # http: endpoint receiving messages


def agent_handle(kind_or_agent, **kwargs) -> AgentHandle:
    """AgentHandle from a baseline kind name or a ScriptedAgent instance."""
    if isinstance(kind_or_agent, str):
        agent = baseline_agent(kind_or_agent)
    else:
        agent = kind_or_agent
    kwargs.setdefault("identity", agent.identity)
    return AgentHandle(transport="in_process", agent=agent, **kwargs)


# --------------------------------------------------------------------------
# transports: (engine messages) -> next client message

class _InProcessClient:
    """Adapter turning engine messages into ScriptedAgent calls.

    Privileged fields (episode latents for oracle agents, prior stats) come
    straight from the engine; this is the in-process testing surface, not a
    remote protocol.
    """

    def __init__(self, handle: AgentHandle, engine: SessionEngine,
                 master_seed: int, run_index: int, phase: str = "scientist"):
        self.handle = handle
        self.agent = handle.agent
        self.engine = engine
        self.master_seed = master_seed
        self.run_index = run_index
        self.phase = phase
        self.begun = False
        self.history: list = []

    def _begin(self, desc_payload: dict) -> None:
        rng = RngState(self.master_seed).substream("trial", self.run_index)
        agent_rng = rng.substream("agent" if self.phase == "scientist" else "novice_agent")
        record = self.engine.record
        info = AgentInfo(
            config=record.config,
            goal_id=record.goal_id,
            framing=desc_payload.get("framing", ""),
            design_space=desc_payload.get("design_space", {}),
            stats=record.prior_stats,
            rng=agent_rng,
            explanation_budget=record.explanation_budget,
            theta=dict(self.engine._episode.theta) if getattr(self.agent, "wants_theta", False) else None,
            explanation=desc_payload.get("explanation"),
        )
        self.agent.begin(info)
        self.begun = True

    def respond(self, msgs: list[WireMessage]) -> WireMessage | None:
        """Consume engine messages; return the next client message or None."""
        session = self.engine.session_id
        action = None
        for m in msgs:
            if m.type == "env_description":
                self._begin(m.payload)
                if not any(x.type == "query_batch" for x in msgs):
                    action = ("experiment", None)
            elif m.type == "query_batch":
                if m.payload.get("phase") == "novice" and self.phase != "novice":
                    return None      # caller switches to the novice client
                if not self.begun:
                    self._begin(m.payload)
                action = ("predict", m.payload)
            elif m.type == "experiment_result":
                design = m.payload.get("design", {})
                self.history.append((design, m.payload.get("value"), m.payload.get("text", "")))
                self.agent.observe(self.engine.record.steps[-1].design,
                                   self.engine.record.steps[-1].value,
                                   m.payload.get("text", ""))
                if action is None:
                    action = ("experiment", None)
            elif m.type == "invalid_design":
                if int(m.payload.get("retries_left", 0)) > 0:
                    action = ("experiment", None)
            elif m.type == "explain_request":
                action = ("explain", m.payload)
            elif m.type == "trial_done":
                return None
            elif m.type == "error":
                raise AgentCallError(f"engine error: {m.payload}")
        if action is None:
            action = ("experiment", None)

        kind, payload = action
        if kind == "predict":
            preds = [self.agent.predict(dict(q)) for q in payload["queries"]]
            return WireMessage("prediction_batch", session, 0, jsonable(
                {"checkpoint": payload["checkpoint"], "predictions": preds}))
        if kind == "experiment":
            step = len(self.engine.record.steps)
            design = self.agent.propose_design(step, list(self.history))
            return WireMessage("experiment_request", session, 0,
                               jsonable({"design": design}))
        if kind == "explain":
            text = self.agent.explain(int(payload["budget_chars"]))
            return WireMessage("explanation", session, 0, {"text": str(text)})
        raise AgentCallError(f"no action for engine messages {[m.type for m in msgs]}")


class _StdioClient:
    """Drives an agent subprocess: each engine reply batch goes out as one
    ``{"messages": [...]}`` line, and the agent answers with one WireMessage
    line. A reader thread backs the timeout so buffered lines are never
    missed."""

    def __init__(self, handle: AgentHandle):
        self.handle = handle
        self.proc = subprocess.Popen(
            handle.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, bufsize=1)
        self._lines: queue.Queue = queue.Queue()
        threading.Thread(target=self._pump, daemon=True).start()

    def _pump(self):
        for raw in self.proc.stdout:
            self._lines.put(raw)
        self._lines.put(None)

    def respond(self, msgs: list[WireMessage]) -> WireMessage | None:
        if any(m.type == "trial_done" for m in msgs):
            self.close()
            return None
        batch = json.dumps({"messages": [json.loads(m.encode()) for m in msgs]})
        self.proc.stdin.write(batch + "\n")
        self.proc.stdin.flush()
        try:
            line = self._lines.get(timeout=self.handle.timeout_s)
        except queue.Empty:
            raise AgentCallError("agent-timeout") from None
        if line is None:
            raise AgentCallError("agent closed its stdout")
        return WireMessage.decode(line)

    def close(self):
        if self.proc.stdin and not self.proc.stdin.closed:
            self.proc.stdin.close()
        try:
            self.proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.proc.kill()


class _HttpClient:
    """POSTs engine messages to an agent endpoint; the body of the response
    is the next client message."""

    def __init__(self, handle: AgentHandle):
        self.handle = handle

    def respond(self, msgs: list[WireMessage]) -> WireMessage | None:
        if any(m.type == "trial_done" for m in msgs):
            return None
        body = json.dumps({"messages": [json.loads(m.encode()) for m in msgs]})
        req = urllib.request.Request(self.handle.url, data=body.encode("utf-8"),
                                     headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.handle.timeout_s) as resp:
                obj = json.loads(resp.read().decode("utf-8"))
        except Exception as e:
            raise AgentCallError(f"agent http call failed: {e}") from e
        return WireMessage.decode(json.dumps(obj["message"]))


def _make_client(handle: AgentHandle, engine: SessionEngine, master_seed: int,
                 run_index: int, phase: str = "scientist"):
    if handle.transport == "in_process":
        if handle.agent is None:
            raise ValueError("in_process handle needs an agent")
        return _InProcessClient(handle, engine, master_seed, run_index, phase)
    if handle.transport == "stdio":
        return _StdioClient(handle)
    if handle.transport == "http":
        return _HttpClient(handle)
    raise ValueError(f"unknown transport {handle.transport!r}")


# --------------------------------------------------------------------------
# trial / discovery drivers

def _pump(engine: SessionEngine, hello: WireMessage, client,
          novice_client=None, timeout_s: float = 120.0):
    msgs = engine.handle(hello)
    active = client
    while not engine.done:
        t0 = time.monotonic()
        try:
            reply = active.respond(msgs)
        except Exception as e:
            if engine.record is None:
                raise
            engine.record.incomplete = True
            engine.record.failure = f"agent-error: {e}"
            break
        elapsed = time.monotonic() - t0
        if elapsed > timeout_s and engine.record is not None:
            engine.record.incomplete = True
            engine.record.failure = "agent-timeout"
        if reply is None:
            if novice_client is not None and active is client and not engine.done:
                active = novice_client
                reply = active.respond(msgs)
                if reply is None:
                    break
            else:
                break
        msgs = engine.handle(reply)


def _hello(config: EnvConfig, goal_id: str, identity: str, master_seed: int,
           run_index: int, mode: str, checkpoints, queries_per_checkpoint: int,
           explanation_budget: int, novice_identity: str | None = None) -> WireMessage:
    payload = {
        "env": config.env_id,
        "goal": goal_id,
        "seed": master_seed,
        "run_index": run_index,
        "identity": identity,
        "mode": mode,
        "prior_mode": config.prior_framing,
        "checkpoints": list(checkpoints),
        "queries_per_checkpoint": queries_per_checkpoint,
        "explanation_budget": explanation_budget,
    }
    if novice_identity is not None:
        payload["novice_identity"] = novice_identity
    if config.variant:
        payload["variant"] = config.variant
    if config.params:
        payload["params"] = config.params_dict()
    return WireMessage("hello", "", 0, jsonable(payload))


def run_trial(config: EnvConfig, goal_id: str, agent: AgentHandle,
              checkpoints=DEFAULT_CHECKPOINTS, queries_per_checkpoint: int = 10,
              master_seed: int = 0, run_index: int = 0,
              settings: EngineSettings | None = None) -> TrialRecord:
    """One checkpointed trial; returns the full TrialRecord."""
    settings = settings or EngineSettings()
    settings = _with_retry(settings, agent.retry_limit)
    settings = _with_verbalizer(settings, config)
    engine = SessionEngine(settings)
    hello = _hello(config, goal_id, agent.identity, master_seed, run_index,
                   "trial", checkpoints, queries_per_checkpoint,
                   settings.explanation_budget)
    client = _make_client(agent, engine, master_seed, run_index)
    _pump(engine, hello, client, timeout_s=agent.timeout_s)
    if engine.record is None:
        raise AgentCallError("session failed before the episode started")
    if not engine.done:
        engine.record.incomplete = True
        engine.record.failure = engine.record.failure or "agent-abandoned"
    return engine.record


def run_discovery(config: EnvConfig, goal_id: str, scientist: AgentHandle,
                  novice: AgentHandle, steps: int = 10,
                  budget_chars: int = 2000, queries_per_checkpoint: int = 10,
                  master_seed: int = 0, run_index: int = 0,
                  settings: EngineSettings | None = None) -> DiscoveryRecord:
    """Scientist phase, bounded explanation, then a novice quizzed without
    history. Returns the DiscoveryRecord."""
    checkpoints = tuple(c for c in DEFAULT_CHECKPOINTS if c < steps) + (steps,)
    settings = settings or EngineSettings()
    settings = _with_retry(settings, scientist.retry_limit)
    settings = _with_verbalizer(settings, config)
    engine = SessionEngine(settings)
    hello = _hello(config, goal_id, scientist.identity, master_seed, run_index,
                   "discovery", checkpoints, queries_per_checkpoint, budget_chars,
                   novice_identity=novice.identity)
    sci_client = _make_client(scientist, engine, master_seed, run_index)
    nov_client = _make_client(novice, engine, master_seed, run_index, phase="novice")
    _pump(engine, hello, sci_client, novice_client=nov_client,
          timeout_s=scientist.timeout_s)
    return engine.discovery


def _with_retry(settings: EngineSettings, retry_limit: int) -> EngineSettings:
    if settings.retry_limit == retry_limit:
        return settings
    return replace(settings, retry_limit=retry_limit)


def _with_verbalizer(settings: EngineSettings, config: EnvConfig) -> EngineSettings:
    # The verbalizer is engine-side configuration; in-process callers carry
    # it on the EnvConfig, so propagate it into the session settings.
    if config.verbalizer == settings.verbalizer and \
            config.verbalizer_endpoint == settings.verbalizer_endpoint:
        return settings
    return replace(settings, verbalizer=config.verbalizer,
                   verbalizer_endpoint=config.verbalizer_endpoint)


def run_trials(config: EnvConfig, goal_id: str, agent_factory, runs: int = 5,
               master_seed: int = 0, **kwargs) -> list[TrialRecord]:
    """``runs`` independent trials sharing one master seed; run_index varies."""
    records = []
    for r in range(runs):
        handle = agent_factory() if callable(agent_factory) else agent_handle(agent_factory)
        records.append(run_trial(config, goal_id, handle, master_seed=master_seed,
                                 run_index=r, **kwargs))
    return records


# --------------------------------------------------------------------------
# replay

class _TranscriptAgent(ScriptedAgent):
    """Replays the designs, predictions, and explanation of a record."""

    def __init__(self, record: dict, explanation: str | None = None,
                 novice: dict | None = None):
        self.identity = record["agent_identity"]
        designs = []
        for step in record["steps"]:
            for att in step["attempts"]:
                designs.append(att["design"])
            if step["design"] is not None:
                designs.append(step["design"])
        self._designs = designs
        self._batches = [list(c["predictions"]) for c in record["checkpoint_results"]]
        if novice is not None:
            self._batches.append(list(novice))
        self._explanation = explanation or ""
        self._di = 0
        self._bi = -1
        self._qi = 0

    def begin(self, info):
        self.info = info

    def propose_design(self, step, history):
        d = self._designs[self._di]
        self._di += 1
        return d

    def predict(self, query_payload):
        if self._qi == 0:
            self._bi += 1
        batch = self._batches[self._bi]
        v = batch[self._qi]
        self._qi = (self._qi + 1) % len(batch)
        return v

    def explain(self, budget):
        return self._explanation


def _settings_from_record(record_obj: dict) -> EngineSettings:
    kw = {}
    stats = record_obj.get("prior_stats")
    if stats:
        kw["prior_stats_samples"] = int(stats["n_samples"])
    eigs = [s.get("eig") for s in record_obj.get("steps", []) if s.get("eig")]
    if eigs:
        kw["compute_eig"] = True
        kw["eig_n_outer"] = int(eigs[0]["n_outer"])
        kw["eig_m_inner"] = int(eigs[0]["m_inner"])
    kw["retry_limit"] = int(record_obj["retry_limit"])
    kw["explanation_budget"] = int(record_obj["explanation_budget"])
    return EngineSettings(**kw)


def replay_trial(record_obj: dict) -> tuple[TrialRecord, bool]:
    """Re-execute a persisted trial from its seed plan; report byte equality."""
    config = EnvConfig.from_jsonable(record_obj["config"])
    agent = _TranscriptAgent(record_obj)
    handle = AgentHandle(transport="in_process", agent=agent,
                         identity=record_obj["agent_identity"],
                         retry_limit=int(record_obj["retry_limit"]))
    rec = run_trial(config, record_obj["goal_id"], handle,
                    checkpoints=tuple(record_obj["checkpoints"]),
                    queries_per_checkpoint=int(record_obj["queries_per_checkpoint"]),
                    master_seed=int(record_obj["master_seed"]),
                    run_index=int(record_obj["run_index"]),
                    settings=_settings_from_record(record_obj))
    match = record_equal(rec.to_jsonable(), record_obj)
    return rec, match


def replay_discovery(disc_obj: dict) -> tuple[DiscoveryRecord, bool]:
    sci_obj = disc_obj["scientist"]
    config = EnvConfig.from_jsonable(sci_obj["config"])
    scientist = _TranscriptAgent(sci_obj, explanation=disc_obj["explanation"])
    novice = _TranscriptAgent(
        {"agent_identity": disc_obj["novice_identity"], "steps": [],
         "checkpoint_results": [], "retry_limit": sci_obj["retry_limit"]},
        novice=disc_obj["novice_predictions"])
    steps = max(sci_obj["checkpoints"])
    rec = run_discovery(
        config, sci_obj["goal_id"],
        AgentHandle(agent=scientist, identity=scientist.identity,
                    retry_limit=int(sci_obj["retry_limit"])),
        AgentHandle(agent=novice, identity=disc_obj["novice_identity"]),
        steps=steps, budget_chars=int(disc_obj["explanation_budget"]),
        queries_per_checkpoint=int(sci_obj["queries_per_checkpoint"]),
        master_seed=int(sci_obj["master_seed"]),
        run_index=int(sci_obj["run_index"]),
        settings=_settings_from_record(sci_obj))
    match = record_equal(rec.to_jsonable(), disc_obj)
    return rec, match
