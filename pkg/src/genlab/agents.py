"""Scripted in-process agents: baselines and test fixtures.

Every baseline samples designs uniformly from the design space (except
``fixed_design``); they differ in how they predict:

    random / posterior_mean  importance-sampling posterior mean over prior
                             particles conditioned on the observed history
    fixed_design             same predictor, one fixed design repeated
    mu0_predictor            always answers the prior predictive mean
    oracle_theta             reads the episode latents (test-only privilege)

Agent randomness comes from the trial's ``agent`` substream so a replay
regenerates identical proposals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .envs import Design, EnvConfig, make_env
from .evaluation import (
    PriorPredictiveStats,
    prior_particles,
    reweight_particles,
)
from .rng import RngState

BASELINE_KINDS = ("random", "posterior_mean", "fixed_design", "mu0_predictor", "oracle_theta")


@dataclass
class AgentInfo:
    """Everything the harness hands an in-process agent at session start."""

    config: EnvConfig
    goal_id: str
    framing: str
    design_space: dict
    stats: PriorPredictiveStats
    rng: RngState
    explanation_budget: int
    theta: dict | None = None          # only for oracle agents
    explanation: str | None = None     # only for novice-phase agents


class ScriptedAgent:
    """In-process agent interface driven by the harness."""

    identity = "scripted"
    wants_theta = False

    def begin(self, info: AgentInfo) -> None:
        self.info = info

    def propose_design(self, step: int, history: list) -> Design:
        raise NotImplementedError

    def observe(self, design: Design, value, text: str) -> None:
        pass

    def predict(self, query_payload: dict):
        raise NotImplementedError

    def explain(self, budget: int) -> str:
        return ""


class _RandomDesignMixin:
    def propose_design(self, step: int, history: list) -> Design:
        env = make_env(self.info.config)
        return env.random_design(self.info.rng.substream("design", step))


class PosteriorMeanAgent(_RandomDesignMixin, ScriptedAgent):
    """Random designs; predictions are particle-posterior means of the target."""

    identity = "posterior_mean"

    def __init__(self, n_particles: int = 4000):
        self.n_particles = n_particles

    def begin(self, info: AgentInfo) -> None:
        super().begin(info)
        self.env = make_env(info.config)
        self.goal = self.env.get_goal(info.goal_id)
        self.particles = prior_particles(info.config, self.n_particles,
                                         info.rng.substream("particles"))

    def observe(self, design: Design, value, text: str) -> None:
        self.particles = reweight_particles(self.info.config, self.particles, design, value)

    def _target_values(self, query_payload: dict) -> np.ndarray:
        cols = self.particles.cols
        n = self.particles.size
        if self.goal.target == "latent":
            name = {"infection_rate": "theta", "discount_factor": "log_k"}.get(
                query_payload.get("target"), None)
            if name == "log_k":
                return np.exp(cols["log_k"])
            if name is not None:
                return np.asarray(cols[name], dtype=np.float64)
            if query_payload.get("target") == "source_locations":
                ks = range(int(self.env.params["num_sources"]))
                stacked = [cols[f"source_{k}_{ax}"] for k in ks for ax in ("x", "y")]
                return np.stack(stacked, axis=-1)
            raise KeyError(f"unknown latent target {query_payload!r}")
        design = self.env.parse_design(query_payload)
        return np.asarray(self.env.mean_response_cols(cols, design), dtype=np.float64)

    def predict(self, query_payload: dict):
        values = self._target_values(query_payload)
        mean = self.particles.posterior_mean(values)
        if self.goal.error_fn == "zero_one":
            return 1 if float(mean) > 0.5 else 0
        if np.ndim(mean) > 0:
            return tuple(float(v) for v in np.asarray(mean).ravel())
        return float(mean)

    def explain(self, budget: int) -> str:
        w = self.particles.normalized_weights()
        summary = {k: float(np.dot(w, np.asarray(v, dtype=np.float64)))
                   for k, v in self.particles.cols.items()}
        text = "posterior means: " + json.dumps(summary, sort_keys=True)
        return text[:budget]


class RandomAgent(PosteriorMeanAgent):
    identity = "random"


class FixedDesignAgent(PosteriorMeanAgent):
    """Repeats one design; otherwise identical to the posterior-mean agent."""

    identity = "fixed_design"

    def __init__(self, design: Design | None = None, n_particles: int = 4000):
        super().__init__(n_particles)
        self.fixed = design

    def begin(self, info: AgentInfo) -> None:
        super().begin(info)
        if self.fixed is None:
            # Deterministic default: one random design from a dedicated stream.
            env = make_env(info.config)
            self.fixed = env.random_design(info.rng.substream("fixed_design"))

    def propose_design(self, step: int, history: list) -> Design:
        return dict(self.fixed)


class Mu0Agent(_RandomDesignMixin, ScriptedAgent):
    """Predicts the prior predictive mean for every query."""

    identity = "mu0_predictor"

    def predict(self, query_payload: dict):
        return self.info.stats.mu0

    def explain(self, budget: int) -> str:
        return ""


class OracleThetaAgent(_RandomDesignMixin, ScriptedAgent):
    """Answers with the true noiseless target; needs the episode latents."""

    identity = "oracle_theta"
    wants_theta = True

    def begin(self, info: AgentInfo) -> None:
        super().begin(info)
        if info.theta is None:
            raise ValueError("oracle_theta requires the episode latents")
        self.env = make_env(info.config)
        self.goal = self.env.get_goal(info.goal_id)

    def predict(self, query_payload: dict):
        theta = self.info.theta
        if self.goal.target == "latent":
            target = query_payload.get("target")
            if target == "infection_rate":
                return theta["theta"]
            if target == "discount_factor":
                return math.exp(theta["log_k"])
            if target == "source_locations":
                ks = range(int(self.env.params["num_sources"]))
                return tuple(theta[f"source_{k}_{ax}"] for k in ks for ax in ("x", "y"))
            raise KeyError(f"unknown latent target {query_payload!r}")
        design = self.env.parse_design(query_payload)
        value = self.env.mean_response(theta, design)
        if self.goal.error_fn == "zero_one":
            return 1 if float(value) > 0.5 else 0
        return value

    def explain(self, budget: int) -> str:
        text = "latents: " + json.dumps({k: v for k, v in sorted(self.info.theta.items())})
        return text[:budget]


def baseline_agent(kind: str, **kwargs) -> ScriptedAgent:
    """Construct a scripted baseline by kind name."""
    if kind == "random":
        return RandomAgent(**kwargs)
    if kind == "posterior_mean":
        return PosteriorMeanAgent(**kwargs)
    if kind == "fixed_design":
        return FixedDesignAgent(**kwargs)
    if kind == "mu0_predictor":
        return Mu0Agent(**kwargs)
    if kind == "oracle_theta":
        return OracleThetaAgent(**kwargs)
    raise ValueError(f"unknown baseline kind {kind!r}; choose from {BASELINE_KINDS}")


@dataclass
class CallbackAgent(ScriptedAgent):
    """Adapter for ad-hoc scripted behavior in tests."""

    on_design: Callable | None = None
    on_predict: Callable | None = None
    on_explain: Callable | None = None
    identity: str = "callback"
    wants_theta: bool = False
    seen: list = field(default_factory=list)

    def propose_design(self, step, history):
        return self.on_design(self, step, history)

    def predict(self, query_payload):
        return self.on_predict(self, query_payload)

    def explain(self, budget):
        if self.on_explain is None:
            return ""
        return self.on_explain(self, budget)
