"""The ten generative environments behind one uniform interface."""

from .base import (
    Design,
    EnvConfig,
    Environment,
    EpisodeState,
    GoalSpec,
    InvalidDesignError,
    Observation,
    Query,
    QuerySet,
    UnknownEnvError,
    env_experiment,
    env_ids,
    env_reset,
    goal_queries,
    make_env,
    theta_row,
)

# Importing the modules registers each environment.
from . import death  # noqa: F401
from . import dugongs  # noqa: F401
from . import emotions  # noqa: F401
from . import hyperbolic  # noqa: F401
from . import irt  # noqa: F401
from . import location  # noqa: F401
from . import mastectomy  # noqa: F401
from . import moral  # noqa: F401
from . import peregrines  # noqa: F401
from . import predator_prey  # noqa: F401


def default_config(env_id: str, **kwargs) -> EnvConfig:
    """EnvConfig with documented defaults; kwargs as for EnvConfig.create."""
    return EnvConfig.create(env_id, **kwargs)


def goal_ids(env_id: str) -> list[str]:
    env = make_env(default_config(env_id))
    return [g.goal_id for g in env.goals()]


def registry_table() -> list[tuple[str, list[str]]]:
    """(env_id, goal ids) for every registered environment."""
    return [(eid, goal_ids(eid)) for eid in env_ids()]


def config_schema(env_id: str) -> dict:
    """Full config document: defaults, priors, design space, goals, framing."""
    config = default_config(env_id)
    env = make_env(config)
    return {
        "env_id": env_id,
        "variant": env.variant,
        "params": env.params,
        "prior_specs": {k: v.to_jsonable() for k, v in env.prior_specs().items()},
        "design_space": env.design_space(),
        "goals": [
            {"goal_id": g.goal_id, "error_fn": g.error_fn, "target": g.target,
             "description": g.description}
            for g in env.goals()
        ],
        "framing": {
            "prior": env.describe(True),
            "no_prior": env.describe(False),
        },
    }


__all__ = [
    "Design", "EnvConfig", "Environment", "EpisodeState", "GoalSpec",
    "InvalidDesignError", "Observation", "Query", "QuerySet", "UnknownEnvError",
    "env_experiment", "env_ids", "env_reset", "goal_queries", "make_env",
    "theta_row", "default_config", "goal_ids", "registry_table", "config_schema",
]
