"""Core types and the uniform environment interface.

Every environment is a generative model: a prior over named latents, a
design space, a forward simulator for one observation, and a pointwise
likelihood. Episodes own a single latent draw and an append-only history.

Randomness discipline: the latent draw comes from the episode stream's
``theta`` substream, observation ``i`` from ``("obs", i)``, so a replay of
the same seed plan reproduces every observation bit-exactly regardless of
how the agent paced the session.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Mapping

import numpy as np

from ..dists import DistributionSpec, draw, draw_block
from ..rng import RngState

Design = dict


class InvalidDesignError(ValueError):
    """Raised for designs outside the declared design space.

    ``reason`` is a stable, machine-readable sentence surfaced to agents so
    they can correct the design and retry.
    """

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class UnknownEnvError(KeyError):
    pass


@dataclass(frozen=True)
class GoalSpec:
    """A prediction target and the error function used to score it."""

    goal_id: str
    error_fn: str          # squared_error | zero_one | vector_mse
    target: str            # "design" (predict outcome at a design) or "latent"
    description: str


@dataclass(frozen=True)
class Query:
    payload: dict
    truth: Any


@dataclass(frozen=True)
class QuerySet:
    goal_id: str
    queries: tuple


@dataclass(frozen=True)
class Observation:
    value: Any              # numeric payload: scalar, or tuple for vector outcomes
    text: str
    meta: tuple = ()        # sorted (key, value) pairs of flags

    def meta_dict(self) -> dict:
        return dict(self.meta)


@dataclass(frozen=True)
class EnvConfig:
    """One environment instantiation: id, variant, and parameter overrides.

    ``params`` override the environment's documented defaults;
    ``prior_framing`` selects the domain-rich vs domain-scrubbed description.
    """

    env_id: str
    variant: str | None = None
    params: tuple = ()      # sorted (key, value) pairs
    prior_framing: bool = True
    verbalizer: str = "template"    # "template" | "external"
    verbalizer_endpoint: str | None = None

    @staticmethod
    def create(env_id: str, variant: str | None = None, params: Mapping | None = None,
               prior_framing: bool = True, verbalizer: str = "template",
               verbalizer_endpoint: str | None = None) -> "EnvConfig":
        items = tuple(sorted((str(k), v) for k, v in (params or {}).items()))
        return EnvConfig(env_id=env_id, variant=variant, params=items,
                         prior_framing=prior_framing, verbalizer=verbalizer,
                         verbalizer_endpoint=verbalizer_endpoint)

    def params_dict(self) -> dict:
        return dict(self.params)

    def to_jsonable(self) -> dict:
        return {
            "env_id": self.env_id,
            "variant": self.variant,
            "params": self.params_dict(),
            "prior_framing": self.prior_framing,
            "verbalizer": self.verbalizer,
            "verbalizer_endpoint": self.verbalizer_endpoint,
        }

    @staticmethod
    def from_jsonable(obj: Mapping) -> "EnvConfig":
        return EnvConfig.create(
            env_id=obj["env_id"],
            variant=obj.get("variant"),
            params=obj.get("params") or {},
            prior_framing=bool(obj.get("prior_framing", True)),
            verbalizer=obj.get("verbalizer", "template"),
            verbalizer_endpoint=obj.get("verbalizer_endpoint"),
        )

    def digest(self) -> str:
        blob = json.dumps(self.to_jsonable(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass
class EpisodeState:
    """One environment instance: sampled latents, history, and its stream."""

    config: EnvConfig
    env: "Environment"
    theta: dict
    rng: RngState
    history: list = field(default_factory=list)

    @property
    def step(self) -> int:
        return len(self.history)


class Environment:
    """Uniform interface over the ten generative environments.

    Subclasses define the prior, the design space, the forward kernel and
    its likelihood, goals with ground truth, and the two framing texts.
    ``loglik_bcast`` must accept numpy-broadcastable latent columns and
    observations so estimators can evaluate (outer x inner) grids in bulk.
    """

    env_id: ClassVar[str] = ""
    integer_latents: ClassVar[frozenset] = frozenset()

    def __init__(self, config: EnvConfig):
        self.config = config
        self.params = dict(self.default_params())
        overrides = config.params_dict()
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise UnknownEnvError(f"{self.env_id}: unknown params {sorted(unknown)}")
        self.params.update(overrides)
        self.variant = config.variant

    # -- declarative surface -------------------------------------------------
    @classmethod
    def default_params(cls) -> dict:
        return {}

    def prior_specs(self) -> dict[str, DistributionSpec]:
        raise NotImplementedError

    def design_space(self) -> dict:
        """JSON-able design schema: field names, types, bounds, constraints."""
        raise NotImplementedError

    def goals(self) -> list[GoalSpec]:
        raise NotImplementedError

    def describe(self, prior_framing: bool) -> str:
        raise NotImplementedError

    # -- sampling ------------------------------------------------------------
    def sample_theta(self, rng: RngState) -> dict:
        """Draw all latents in prior_specs order; one draw per latent."""
        theta = {}
        for name, spec in self.prior_specs().items():
            x = draw(spec, rng)
            if name in self.integer_latents:
                x = int(math.floor(x))
            theta[name] = x
        return theta

    def sample_theta_block(self, rng: RngState, size: int) -> dict[str, np.ndarray]:
        """Column-wise prior draws, same latent order as ``sample_theta``."""
        cols = {}
        for name, spec in self.prior_specs().items():
            x = draw_block(spec, rng, size)
            if name in self.integer_latents:
                x = np.floor(x).astype(np.int64)
            cols[name] = x
        return cols

    # -- designs ---------------------------------------------------------------
    def parse_design(self, raw: Mapping) -> Design:
        """Coerce a wire payload into a typed design; raises InvalidDesignError."""
        raise NotImplementedError

    def validate_design(self, design: Design) -> str | None:
        """None when valid, else the machine-readable rejection reason."""
        raise NotImplementedError

    def random_design(self, rng: RngState) -> Design:
        raise NotImplementedError

    # -- kernel ---------------------------------------------------------------
    def simulate(self, theta: dict, design: Design, rng: RngState):
        raise NotImplementedError

    def mean_response(self, theta: dict, design: Design):
        """Noiseless mean of the observation at ``design`` under ``theta``."""
        raise NotImplementedError

    def mean_response_cols(self, cols: Mapping[str, np.ndarray], design: Design) -> np.ndarray:
        """Batched ``mean_response`` over latent columns. Default: loop."""
        size = len(next(iter(cols.values())))
        return np.asarray(
            [self.mean_response(theta_row(cols, i), design) for i in range(size)],
            dtype=np.float64)

    def log_likelihood(self, theta: dict, design: Design, value) -> float:
        raise NotImplementedError

    def loglik_bcast(self, cols: Mapping[str, np.ndarray], design: Design, ys: np.ndarray) -> np.ndarray:
        """Broadcasted log p(y | theta, design) over latent columns.

        Latent columns and observations broadcast together; every
        environment provides closed-form array math.
        """
        raise NotImplementedError(f"{self.env_id}: loglik_bcast not implemented")

    def simulate_batch(self, cols: Mapping[str, np.ndarray], design: Design, rng: RngState) -> np.ndarray:
        """Vectorized forward samples, one per latent row. Default: loop."""
        size = len(next(iter(cols.values())))
        out = [self.simulate(theta_row(cols, i), design, rng) for i in range(size)]
        return np.asarray(out, dtype=np.float64)

    # -- goals ----------------------------------------------------------------
    def get_goal(self, goal_id: str) -> GoalSpec:
        for g in self.goals():
            if g.goal_id == goal_id:
                return g
        raise UnknownEnvError(f"{self.env_id}: unknown goal {goal_id!r}")

    def sample_goal_query(self, goal: GoalSpec, theta: dict, rng: RngState) -> Query:
        raise NotImplementedError

    def goal_target_sample(self, goal: GoalSpec, rng: RngState):
        """One prior-predictive sample of the goal's predictand.

        Used to build the prior baseline statistics: a fresh latent draw
        plus, for design goals, a fresh random design and a simulated
        outcome.
        """
        theta = self.sample_theta(rng)
        if goal.target == "latent":
            q = self.sample_goal_query(goal, theta, rng)
            return q.truth
        design = self.random_design(rng)
        return self.simulate(theta, design, rng)

    def goal_target_sample_block(self, goal: GoalSpec, n: int, rng: RngState) -> list:
        """``n`` prior-predictive samples, one hermetic substream each."""
        return [self.goal_target_sample(goal, rng.substream("sample", i))
                for i in range(n)]

    # -- rendering --------------------------------------------------------------
    def observation_text(self, theta: dict, design: Design, value) -> tuple[str, tuple]:
        """Canonical numeric rendering; verbal environments override."""
        return f"result: {render_value(value)}", ()


def theta_row(cols: Mapping[str, np.ndarray], i: int) -> dict:
    """Scalar latent dict for row ``i`` of column arrays."""
    out = {}
    for k, v in cols.items():
        x = v[i]
        out[k] = int(x) if np.issubdtype(np.asarray(x).dtype, np.integer) else float(x)
    return out


def render_value(value) -> str:
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(render_value(v) for v in value) + "]"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def bernoulli_loglik_from_logit(logit: np.ndarray, y: np.ndarray) -> np.ndarray:
    """log Bernoulli(y | logistic(logit)), stable for any logit magnitude."""
    logit = np.asarray(logit, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    # log p = -softplus(-logit), log(1-p) = -softplus(logit)
    return -(y * np.logaddexp(0.0, -logit) + (1.0 - y) * np.logaddexp(0.0, logit))


def design_float(raw: Mapping, key: str) -> float:
    """Read a numeric design field (accepts decimal strings off the wire)."""
    if key not in raw:
        raise InvalidDesignError(f"missing design field '{key}'")
    try:
        return float(raw[key])
    except (TypeError, ValueError):
        raise InvalidDesignError(f"design field '{key}' must be a number") from None


def design_int(raw: Mapping, key: str) -> int:
    v = design_float(raw, key)
    if v != int(v):
        raise InvalidDesignError(f"design field '{key}' must be an integer")
    return int(v)


# --------------------------------------------------------------------------
# registry

_REGISTRY: dict[str, type] = {}


def register(cls: type) -> type:
    _REGISTRY[cls.env_id] = cls
    return cls


def env_ids() -> list[str]:
    return sorted(_REGISTRY)


def make_env(config: EnvConfig) -> Environment:
    try:
        cls = _REGISTRY[config.env_id]
    except KeyError:
        raise UnknownEnvError(f"unknown environment {config.env_id!r}") from None
    return cls(config)


# --------------------------------------------------------------------------
# episode operations

def env_reset(config: EnvConfig, rng: RngState) -> EpisodeState:
    """Sample a fresh episode: latents from the ``theta`` substream."""
    env = make_env(config)
    theta = env.sample_theta(rng.substream("theta"))
    return EpisodeState(config=config, env=env, theta=theta, rng=rng)


def env_experiment(state: EpisodeState, design: Design) -> Observation:
    """Run one experiment; appends to history or raises InvalidDesignError."""
    env = state.env
    design = env.parse_design(design)
    reason = env.validate_design(design)
    if reason is not None:
        raise InvalidDesignError(reason)
    obs_rng = state.rng.substream("obs", len(state.history))
    value = env.simulate(state.theta, design, obs_rng)
    text, meta = env.observation_text(state.theta, design, value)
    obs = Observation(value=value, text=text, meta=meta)
    state.history.append((design, obs))
    return obs


def goal_queries(state: EpisodeState, goal_id: str, count: int, rng: RngState) -> QuerySet:
    """Sample ``count`` evaluation queries with ground truth from theta."""
    if count < 1:
        raise ValueError("count must be >= 1")
    env = state.env
    goal = env.get_goal(goal_id)
    qs = tuple(env.sample_goal_query(goal, state.theta, rng) for _ in range(count))
    return QuerySet(goal_id=goal_id, queries=qs)
