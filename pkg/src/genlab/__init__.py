"""Deterministic generative environments with information-gain scoring.

Ten simulated scientific domains behind one interface (reset, experiment,
goal queries), expected-information-gain scoring of designs, prior-predictive
standardized prediction error, a checkpointed trial harness with a
scientist-to-novice discovery protocol, and a language-neutral wire protocol
(stdio and HTTP) for external agents.
"""

from .rng import RngState, substream
from .dists import (
    DistributionSpec,
    InvalidParams,
    bernoulli,
    binomial,
    draw,
    half_normal,
    log_prob,
    normal,
    poisson,
    std_normal_cdf,
    std_normal_inv_cdf,
    truncated_normal,
    uniform,
)
from .envs import (
    EnvConfig,
    EpisodeState,
    GoalSpec,
    InvalidDesignError,
    Observation,
    Query,
    QuerySet,
    default_config,
    env_experiment,
    env_ids,
    env_reset,
    goal_queries,
    make_env,
)
from .evaluation import (
    EigEstimate,
    ParticleSet,
    PriorPredictiveStats,
    ei_regret,
    eig_nmc,
    eig_oracle_small,
    prior_grid,
    prior_particles,
    prior_predictive_stats,
    reweight_particles,
    standardized_error,
)
from .agents import baseline_agent
from .harness import (
    AgentHandle,
    agent_handle,
    replay_discovery,
    replay_trial,
    run_discovery,
    run_trial,
    run_trials,
)
from .protocol import EngineSettings, SessionEngine, WireMessage
from .records import DiscoveryRecord, TrialRecord, aggregate_table

__version__ = "0.1.0"

__all__ = [
    "RngState", "substream",
    "DistributionSpec", "InvalidParams", "bernoulli", "binomial", "draw",
    "half_normal", "log_prob", "normal", "poisson", "std_normal_cdf",
    "std_normal_inv_cdf", "truncated_normal", "uniform",
    "EnvConfig", "EpisodeState", "GoalSpec", "InvalidDesignError", "Observation",
    "Query", "QuerySet", "default_config", "env_experiment", "env_ids",
    "env_reset", "goal_queries", "make_env",
    "EigEstimate", "ParticleSet", "PriorPredictiveStats", "ei_regret", "eig_nmc",
    "eig_oracle_small", "prior_grid", "prior_particles", "prior_predictive_stats",
    "reweight_particles", "standardized_error",
    "baseline_agent", "AgentHandle", "agent_handle", "replay_discovery",
    "replay_trial", "run_discovery", "run_trial", "run_trials",
    "EngineSettings", "SessionEngine", "WireMessage",
    "DiscoveryRecord", "TrialRecord", "aggregate_table",
]
