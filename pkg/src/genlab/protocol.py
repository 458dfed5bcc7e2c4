"""Language-neutral wire protocol and the per-session engine state machine.

Messages are newline-delimited JSON objects with fields ``type``, ``session``,
``step``, ``schema_version``, ``payload``; payload floats travel as decimal
strings. Unknown fields are ignored for forward compatibility.

Session flow (client messages on the left):

    hello              -> env_description, query_batch (checkpoint 0)
    prediction_batch   -> [] while experiments remain, else trial_done
                          (discovery mode: explain_request)
    experiment_request -> experiment_result [+ query_batch at checkpoints]
                          or invalid_design (a retry, never a schedule step)
    explanation        -> query_batch (novice phase)
    prediction_batch   -> trial_done (novice phase, discovery mode)

Empty responses mean the client should proceed with its next experiment.
The same engine backs the stdio server, the HTTP service, and in-process
trials, so all transports produce identical records.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .envs import (
    EnvConfig,
    InvalidDesignError,
    UnknownEnvError,
    env_experiment,
    env_reset,
    goal_queries,
    make_env,
)
from .evaluation import eig_nmc, error_value, prior_predictive_stats, standardized_error
from .records import (
    SCHEMA_VERSION,
    CheckpointRecord,
    DiscoveryRecord,
    StepRecord,
    TrialRecord,
    jsonable,
    parse_value,
)
from .rng import RngState

MESSAGE_TYPES = (
    "hello", "env_description", "experiment_request", "experiment_result",
    "invalid_design", "query_batch", "prediction_batch", "explain_request",
    "explanation", "trial_done", "error",
)


class ProtocolError(ValueError):
    pass


@dataclass(frozen=True)
class WireMessage:
    type: str
    session: str
    step: int
    payload: dict
    schema_version: str = SCHEMA_VERSION

    def encode(self) -> str:
        return json.dumps(
            {"type": self.type, "session": self.session, "step": self.step,
             "schema_version": self.schema_version, "payload": self.payload},
            sort_keys=True, separators=(",", ":"))

    @staticmethod
    def decode(line: str) -> "WireMessage":
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ProtocolError(f"malformed JSON: {e}") from None
        if not isinstance(obj, dict):
            raise ProtocolError("message must be a JSON object")
        mtype = obj.get("type")
        if mtype not in MESSAGE_TYPES:
            raise ProtocolError(f"unknown message type {mtype!r}")
        payload = obj.get("payload", {})
        if not isinstance(payload, dict):
            raise ProtocolError("payload must be an object")
        return WireMessage(
            type=mtype,
            session=str(obj.get("session", "")),
            step=int(obj.get("step", 0)),
            payload=payload,
            schema_version=str(obj.get("schema_version", SCHEMA_VERSION)),
        )


@dataclass(frozen=True)
class EngineSettings:
    """Operator-side configuration; hello fields can narrow but not widen it."""

    checkpoints: tuple = (0, 1, 3, 5, 7, 10)
    queries_per_checkpoint: int = 10
    explanation_budget: int = 2000
    retry_limit: int = 3
    prior_stats_samples: int = 4000
    compute_eig: bool = False
    eig_n_outer: int = 500
    eig_m_inner: int = 500
    env_params: dict = field(default_factory=dict)     # env_id -> param overrides
    verbalizer: str = "template"                       # "template" | "external"
    verbalizer_endpoint: str | None = None
    record_dir: str | None = None

    def to_jsonable(self) -> dict:
        return {
            "checkpoints": list(self.checkpoints),
            "queries_per_checkpoint": self.queries_per_checkpoint,
            "explanation_budget": self.explanation_budget,
            "retry_limit": self.retry_limit,
            "prior_stats_samples": self.prior_stats_samples,
            "compute_eig": self.compute_eig,
            "eig_n_outer": self.eig_n_outer,
            "eig_m_inner": self.eig_m_inner,
            "env_params": self.env_params,
            "verbalizer": self.verbalizer,
            "verbalizer_endpoint": self.verbalizer_endpoint,
            "record_dir": self.record_dir,
        }

    @staticmethod
    def from_jsonable(obj: dict) -> "EngineSettings":
        kw = {}
        for name in ("queries_per_checkpoint", "explanation_budget", "retry_limit",
                     "prior_stats_samples", "eig_n_outer", "eig_m_inner"):
            if name in obj:
                kw[name] = int(obj[name])
        if "checkpoints" in obj:
            kw["checkpoints"] = tuple(int(c) for c in obj["checkpoints"])
        if "compute_eig" in obj:
            kw["compute_eig"] = bool(obj["compute_eig"])
        if "env_params" in obj:
            kw["env_params"] = dict(obj["env_params"])
        if "verbalizer" in obj:
            kw["verbalizer"] = str(obj["verbalizer"])
        if "verbalizer_endpoint" in obj:
            kw["verbalizer_endpoint"] = obj["verbalizer_endpoint"]
        if "record_dir" in obj:
            kw["record_dir"] = obj["record_dir"]
        return EngineSettings(**kw)


def load_settings(path: str | None) -> EngineSettings:
    if not path:
        return EngineSettings()
    with open(path, "r", encoding="utf-8") as fh:
        return EngineSettings.from_jsonable(json.load(fh))


class SessionEngine:
    """One episode behind the wire protocol; strictly serial."""

    def __init__(self, settings: EngineSettings | None = None):
        self.settings = settings or EngineSettings()
        self.awaiting = "hello"
        self.session_id = ""
        self.record: TrialRecord | None = None
        self.discovery: DiscoveryRecord | None = None
        self._t0 = time.monotonic()
        self._token_cache: dict[str, list[WireMessage]] = {}
        self._invalid_streak = 0
        self._pending_checkpoint: int | None = None
        self._pending_queries = None
        self._mode = "trial"

    # -- public entry points -------------------------------------------------
    @property
    def done(self) -> bool:
        return self.awaiting == "done"

    def handle_line(self, line: str) -> list[WireMessage]:
        """Decode and process one wire line; malformed input yields an error
        message (echoing the offending line) and the session continues."""
        line = line.strip()
        if not line:
            return []
        try:
            msg = WireMessage.decode(line)
        except ProtocolError as e:
            return [self._error("malformed-message", str(e), echo=line[:500])]
        return self.handle(msg)

    def handle(self, msg: WireMessage) -> list[WireMessage]:
        if self.done:
            return [self._error("session-done", "this session has finished")]
        if msg.schema_version.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
            return [self._error(
                "version-mismatch",
                f"engine speaks {SCHEMA_VERSION}, client sent {msg.schema_version}")]
        self._log("in", msg)
        handler = {
            "hello": self._on_hello,
            "experiment_request": self._on_experiment,
            "prediction_batch": self._on_predictions,
            "explanation": self._on_explanation,
        }.get(msg.type)
        if handler is None:
            return [self._error("unexpected-message",
                                f"engine does not accept {msg.type!r} messages")]
        return handler(msg)

    # -- helpers ---------------------------------------------------------------
    def _msg(self, mtype: str, payload: dict) -> WireMessage:
        # Messages are logged at construction, exactly once, in build order;
        # trial_done embeds the record so it stays out of the log.
        step = len(self.record.steps) if self.record else 0
        m = WireMessage(type=mtype, session=self.session_id, step=step,
                        payload=jsonable(payload))
        if mtype != "trial_done":
            self._log("out", m)
        return m

    def _error(self, code: str, message: str, echo: str | None = None) -> WireMessage:
        payload = {"code": code, "message": message}
        if echo is not None:
            payload["echo"] = echo
        return self._msg("error", payload)

    def _log(self, direction: str, msg: WireMessage) -> None:
        if self.record is not None:
            self.record.message_log.append({"dir": direction, "line": msg.encode()})
        elif msg.type == "hello":
            self._pre_log = [{"dir": direction, "line": msg.encode()}]

    # -- hello -------------------------------------------------------------------
    def _on_hello(self, msg: WireMessage) -> list[WireMessage]:
        if self.awaiting != "hello":
            return [self._error("unexpected-message", "session already started")]
        p = msg.payload
        try:
            env_id = str(p["env"])
            goal_id = str(p["goal"])
            seed = int(p.get("seed", 0))
        except (KeyError, TypeError, ValueError) as e:
            return [self._error("bad-hello", f"hello payload invalid: {e}")]
        run_index = int(p.get("run_index", 0))
        mode = str(p.get("mode", "trial"))
        if mode not in ("trial", "discovery"):
            return [self._error("bad-hello", "mode must be 'trial' or 'discovery'")]
        identity = str(p.get("identity", "anonymous"))
        prior_mode = bool(p.get("prior_mode", True))

        params = dict(self.settings.env_params.get(env_id, {}))
        params.update(p.get("params") or {})
        try:
            config = EnvConfig.create(env_id, variant=p.get("variant"), params=params,
                                      prior_framing=prior_mode,
                                      verbalizer=self.settings.verbalizer,
                                      verbalizer_endpoint=self.settings.verbalizer_endpoint)
            env = make_env(config)
            goal = env.get_goal(goal_id)
        except (UnknownEnvError, ValueError) as e:
            return [self._error("invalid-config", str(e))]

        checkpoints = tuple(sorted(int(c) for c in
                                   p.get("checkpoints", self.settings.checkpoints)))
        qpc = int(p.get("queries_per_checkpoint", self.settings.queries_per_checkpoint))
        budget = int(p.get("explanation_budget", self.settings.explanation_budget))
        if not checkpoints or qpc < 1:
            return [self._error("bad-hello", "need >= 1 checkpoint and >= 1 query per checkpoint")]

        self._mode = mode
        self._novice_identity = str(p.get("novice_identity", "novice"))
        self.session_id = f"{env_id}:{goal_id}:{seed}:{run_index}"
        root = RngState(seed)
        self._trial_rng = root.substream("trial", run_index)
        self._stats = prior_predictive_stats(
            config, goal, self.settings.prior_stats_samples, root.substream("prior_stats"))
        self._episode = env_reset(config, self._trial_rng.substream("episode"))
        self._goal = goal
        self._env = env
        self._checkpoints = checkpoints

        self.record = TrialRecord(
            config=config, goal_id=goal_id, master_seed=seed, run_index=run_index,
            agent_identity=identity, retry_limit=self.settings.retry_limit,
            checkpoints=checkpoints, queries_per_checkpoint=qpc,
            explanation_budget=budget, prior_stats=self._stats,
            theta=dict(self._episode.theta),
        )
        if hasattr(self, "_pre_log"):
            self.record.message_log = self._pre_log + self.record.message_log
            del self._pre_log

        desc = self._msg("env_description", {
            "env": env_id,
            "variant": env.variant,
            "goal": {"goal_id": goal.goal_id, "error_fn": goal.error_fn,
                     "description": goal.description},
            "framing": env.describe(prior_mode),
            "design_space": env.design_space(),
            "checkpoints": list(checkpoints),
            "queries_per_checkpoint": qpc,
            "explanation_budget": budget,
            "retry_limit": self.settings.retry_limit,
            "mode": mode,
            "mu0": self._stats.mu0,
            "sigma0": self._stats.sigma0,
            "observation_format": "numeric payload plus rendered text",
        })
        out = [desc]
        if checkpoints[0] == 0:
            out.append(self._issue_queries(0))
        else:
            self.awaiting = "experiment"
        return out

    # -- queries ---------------------------------------------------------------
    def _issue_queries(self, checkpoint: int, phase: str = "scientist",
                       extra: dict | None = None) -> WireMessage:
        if phase == "novice":
            rng = self._trial_rng.substream("novice_queries")
        else:
            rng = self._trial_rng.substream("queries", checkpoint)
        qs = goal_queries(self._episode, self._goal.goal_id,
                          self.record.queries_per_checkpoint, rng)
        self._pending_checkpoint = checkpoint
        self._pending_queries = qs
        self.awaiting = "novice_predictions" if phase == "novice" else "predictions"
        payload = {"checkpoint": checkpoint, "phase": phase,
                   "queries": [dict(q.payload) for q in qs.queries]}
        if extra:
            payload.update(extra)
        return self._msg("query_batch", payload)

    def _on_predictions(self, msg: WireMessage) -> list[WireMessage]:
        if self.awaiting not in ("predictions", "novice_predictions"):
            return [self._error("unexpected-message", "no query batch is outstanding")]
        p = msg.payload
        preds_raw = p.get("predictions")
        queries = self._pending_queries.queries
        if not isinstance(preds_raw, list) or len(preds_raw) != len(queries):
            return [self._error("prediction-count-mismatch",
                                f"expected {len(queries)} predictions")]
        try:
            preds = [parse_value(x) for x in preds_raw]
        except (TypeError, ValueError) as e:
            return [self._error("bad-predictions", f"predictions must be numeric: {e}")]

        truths = [q.truth for q in queries]
        err = standardized_error(preds, truths, self._goal.error_fn, self._stats)
        raw = [error_value(self._goal.error_fn, pr, t) for pr, t in zip(preds, truths)]

        if self.awaiting == "novice_predictions":
            self.discovery.novice_queries = [dict(q.payload) for q in queries]
            self.discovery.novice_predictions = preds
            self.discovery.novice_truths = truths
            self.discovery.novice_error = err
            return [self._finish()]

        self.record.checkpoint_results.append(CheckpointRecord(
            checkpoint=self._pending_checkpoint,
            queries=[dict(q.payload) for q in queries],
            predictions=preds, truths=truths, raw_errors=raw,
            standardized_error=err))
        current = self._pending_checkpoint
        self._pending_checkpoint = None
        self._pending_queries = None

        later = [c for c in self._checkpoints if c > current]
        if later:
            self.awaiting = "experiment"
            return []
        if self._mode == "discovery":
            self.awaiting = "explanation"
            return [self._msg("explain_request",
                              {"budget_chars": self.record.explanation_budget})]
        return [self._finish()]

    # -- experiments ---------------------------------------------------------
    def _on_experiment(self, msg: WireMessage) -> list[WireMessage]:
        p = msg.payload
        token = p.get("token")
        # Idempotent retries replay the cached response even after the state
        # has advanced past the original call.
        if token is not None and token in self._token_cache:
            return self._token_cache[token]
        if self.awaiting != "experiment":
            return [self._error("unexpected-message", "engine is not awaiting an experiment")]
        raw = p.get("design")
        if not isinstance(raw, dict):
            out = self._reject(raw, "experiment_request payload must carry a 'design' object")
            return self._cache(token, out)
        try:
            design = self._env.parse_design(raw)
            reason = self._env.validate_design(design)
        except InvalidDesignError as e:
            design, reason = raw, e.reason
        if reason is not None:
            out = self._reject(raw, reason)
            return self._cache(token, out)

        self._invalid_streak = 0
        obs = env_experiment(self._episode, design)
        step = StepRecord(attempts=self._drain_attempts(), design=design,
                          value=obs.value, text=obs.text, meta=obs.meta_dict())
        if self.settings.compute_eig:
            step.eig = eig_nmc(self.record.config, design,
                               self.settings.eig_n_outer, self.settings.eig_m_inner,
                               self._trial_rng.substream("eig_step", len(self.record.steps)))
        self.record.steps.append(step)
        n = len(self.record.steps)

        result = self._msg("experiment_result", {
            "design": design, "value": obs.value, "text": obs.text,
            "meta": obs.meta_dict(), "step": n,
        })
        out = [result]
        if n in self._checkpoints:
            out.append(self._issue_queries(n))
        return self._cache(token, out)

    def _reject(self, raw_design, reason: str) -> list[WireMessage]:
        self._invalid_streak += 1
        self._attempts_buffer = getattr(self, "_attempts_buffer", [])
        self._attempts_buffer.append({"design": raw_design, "reason": reason})
        retries_left = self.record.retry_limit - self._invalid_streak
        reject = self._msg("invalid_design", {
            "design": raw_design, "reason": reason, "retries_left": max(retries_left, 0)})
        if retries_left <= 0:
            self.record.incomplete = True
            self.record.failure = "retry-exhausted"
            self.record.steps.append(StepRecord(attempts=self._drain_attempts()))
            return [reject, self._finish()]
        return [reject]

    def _drain_attempts(self) -> list:
        buf = getattr(self, "_attempts_buffer", [])
        self._attempts_buffer = []
        return buf

    def _cache(self, token, out: list[WireMessage]) -> list[WireMessage]:
        if token is not None:
            self._token_cache[token] = out
        return out

    # -- explanation / novice ---------------------------------------------------
    def _on_explanation(self, msg: WireMessage) -> list[WireMessage]:
        if self.awaiting != "explanation":
            return [self._error("unexpected-message", "engine is not awaiting an explanation")]
        text = str(msg.payload.get("text", ""))
        budget = self.record.explanation_budget
        truncated = len(text) > budget
        if truncated:
            text = text[:budget]
        final_err = self.record.checkpoint_results[-1].standardized_error \
            if self.record.checkpoint_results else 0.0
        self.discovery = DiscoveryRecord(
            scientist=self.record, explanation=text, explanation_budget=budget,
            truncated=truncated, novice_identity=self._novice_identity,
            scientist_final_error=final_err)
        return [self._issue_queries(self._checkpoints[-1], phase="novice", extra={
            "explanation": text,
            "framing": self._env.describe(self.record.config.prior_framing),
            "truncated": truncated,
        })]

    # -- finish ----------------------------------------------------------------
    def _finish(self) -> WireMessage:
        self.awaiting = "done"
        self.record.wall_clock_s = time.monotonic() - self._t0
        summary = {"errors_by_checkpoint": {str(c.checkpoint): c.standardized_error
                                            for c in self.record.checkpoint_results},
                   "incomplete": self.record.incomplete}
        if self.discovery is not None:
            # Novice phase log: messages after the explanation was received.
            self.discovery.novice_message_log = self._novice_slice()
            payload = {"record": self.discovery.to_jsonable(),
                       "kind": "discovery", "summary": summary}
        else:
            payload = {"record": self.record.to_jsonable(),
                       "kind": "trial", "summary": summary}
        return self._msg("trial_done", payload)

    def _novice_slice(self) -> list:
        log = self.record.message_log
        for i, entry in enumerate(log):
            if json.loads(entry["line"]).get("type") == "explanation":
                return [dict(e) for e in log[i + 1:]]
        return []
