"""Death process: an infection spreading through a closed population.

With rate theta > 0 the probability that any one of N healthy individuals
is infected by time t is eta = 1 - exp(-theta t); the observed count is
Binomial(N, eta).
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np
from scipy import special as sp

from ..dists import binomial, draw, log_prob, truncated_normal
from ..rng import RngState
from .base import Design, Environment, GoalSpec, Query, design_float, register


def death_eta(theta: float, t: float) -> float:
    """Per-individual infection probability at time t."""
    if theta <= 0:
        raise ValueError("theta must be > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    return -math.expm1(-theta * t)


@register
class DeathProcessEnv(Environment):
    env_id = "death_process"

    @classmethod
    def default_params(cls):
        # t_max keeps the binomial off its ceiling across the design space;
        # larger bounds saturate eta and collapse the error scale.
        return {
            "population": 50,
            "t_max": 2.0,
            "theta_mean": 1.0,
            "theta_sigma": 1.0,
        }

    def prior_specs(self):
        return {"theta": truncated_normal(self.params["theta_mean"],
                                          self.params["theta_sigma"], 0.0, math.inf)}

    def design_space(self):
        return {
            "fields": [{"name": "t", "type": "float", "low": 0.0,
                        "high": self.params["t_max"]}],
            "constraints": [f"t must be between 0 and {self.params['t_max']:g}"],
        }

    def parse_design(self, raw: Mapping) -> Design:
        return {"t": design_float(raw, "t")}

    def validate_design(self, design):
        tmax = self.params["t_max"]
        if not 0.0 <= design["t"] <= tmax:
            return f"t must be between 0 and {tmax:g}"
        return None

    def random_design(self, rng: RngState) -> Design:
        return {"t": self.params["t_max"] * rng.uniform01()}

    def mean_response(self, theta, design):
        return self.params["population"] * death_eta(theta["theta"], design["t"])

    def mean_response_cols(self, cols, design):
        th = np.asarray(cols["theta"], dtype=np.float64)
        return self.params["population"] * -np.expm1(-th * design["t"])

    def simulate(self, theta, design, rng):
        eta = death_eta(theta["theta"], design["t"])
        return draw(binomial(int(self.params["population"]), eta), rng)

    def simulate_batch(self, cols, design, rng):
        from ..dists import _binomial_quantile, _binomial_quantile_arr
        n = int(self.params["population"])
        th = np.asarray(cols["theta"], dtype=np.float64)
        eta = -np.expm1(-th * design["t"])
        u = rng.uniform01_block(th.size).reshape(th.shape)
        flat_eta = eta.ravel()
        flat_u = u.ravel()
        if np.all(flat_eta == flat_eta[0]):
            return _binomial_quantile_arr(n, float(flat_eta[0]), flat_u).reshape(th.shape)
        out = np.fromiter((_binomial_quantile(n, e, uu) for e, uu in zip(flat_eta, flat_u)),
                          dtype=np.int64, count=flat_eta.size)
        return out.reshape(th.shape)

    def log_likelihood(self, theta, design, value):
        eta = death_eta(theta["theta"], design["t"])
        return log_prob(binomial(int(self.params["population"]), eta), value)

    def loglik_bcast(self, cols, design, ys):
        n = int(self.params["population"])
        th = np.asarray(cols["theta"], dtype=np.float64)
        eta = -np.expm1(-th * design["t"])
        y = np.asarray(ys, dtype=np.float64)
        # Guard the degenerate t=0 case: eta == 0 gives mass 1 at y == 0.
        log_eta = np.log(np.where(eta > 0, eta, 1.0))
        log_1m = np.log1p(-np.where(eta < 1, eta, 0.0))
        out = (sp.gammaln(n + 1) - sp.gammaln(y + 1) - sp.gammaln(n - y + 1)
               + y * log_eta + (n - y) * log_1m)
        out = np.where((eta <= 0) & (y != 0), -np.inf, out)
        out = np.where((eta >= 1) & (y != n), -np.inf, out)
        return out

    def goals(self):
        return [
            GoalSpec("num_infected", "squared_error", "design",
                     "predict the expected number infected at a chosen time"),
            GoalSpec("infection_rate", "squared_error", "latent",
                     "predict the infection rate"),
        ]

    def sample_goal_query(self, goal, theta, rng):
        if goal.goal_id == "infection_rate":
            return Query(payload={"target": "infection_rate"}, truth=theta["theta"])
        d = self.random_design(rng)
        return Query(payload=d, truth=self.mean_response(theta, d))

    def describe(self, prior_framing: bool) -> str:
        n = int(self.params["population"])
        tmax = self.params["t_max"]
        if prior_framing:
            return (
                f"You are tracking an infection spreading through a healthy population of {n} individuals. "
                f"Choosing an observation time t in [0, {tmax:g}] reveals how many individuals are infected "
                "at that time. The per-individual infection probability grows with time at an unknown rate."
            )
        return (
            f"You are probing a black-box counter. Submitting a number t in [0, {tmax:g}] returns an "
            f"integer between 0 and {n}. Larger inputs tend to produce larger integers."
        )
