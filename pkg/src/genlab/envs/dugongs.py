"""Dugong growth curves: length as a saturating function of age.

Mean length at age x is m = alpha - beta * |lambda|^x; observed lengths are
N(m, sigma) with fixed sigma.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from ..dists import draw, log_prob, normal, truncated_normal, uniform
from ..rng import RngState
from .base import Design, Environment, GoalSpec, Query, design_float, register


def dugong_mean_length(alpha: float, beta: float, lam: float, x: float) -> float:
    """Mean length at age ``x``."""
    return alpha - beta * abs(lam) ** x


@register
class DugongsEnv(Environment):
    env_id = "dugongs"

    @classmethod
    def default_params(cls):
        return {
            "age_max": 5.0,
            "noise_sigma": 0.25,
            "alpha_mean": 2.5,
            "alpha_sigma": 0.5,
            "beta_mean": 1.0,
            "beta_sigma": 0.3,
        }

    def prior_specs(self):
        return {
            "alpha": truncated_normal(self.params["alpha_mean"], self.params["alpha_sigma"], 0.0, math.inf),
            "beta": truncated_normal(self.params["beta_mean"], self.params["beta_sigma"], 0.0, math.inf),
            "lam": uniform(0.0, 1.0),
        }

    def design_space(self):
        return {
            "fields": [{"name": "age", "type": "float", "low": 0.0,
                        "high": self.params["age_max"]}],
            "constraints": [f"age must be between 0 and {self.params['age_max']:g}"],
        }

    def parse_design(self, raw: Mapping) -> Design:
        return {"age": design_float(raw, "age")}

    def validate_design(self, design):
        amax = self.params["age_max"]
        if not 0.0 <= design["age"] <= amax:
            return f"age must be between 0 and {amax:g}"
        return None

    def random_design(self, rng: RngState) -> Design:
        return {"age": self.params["age_max"] * rng.uniform01()}

    def mean_response(self, theta, design):
        return dugong_mean_length(theta["alpha"], theta["beta"], theta["lam"], design["age"])

    def simulate(self, theta, design, rng):
        mu = self.mean_response(theta, design)
        return mu + draw(normal(0.0, self.params["noise_sigma"]), rng)

    def simulate_batch(self, cols, design, rng):
        from ..dists import draw_block
        mu = self._mu_cols(cols, design)
        return mu + draw_block(normal(0.0, self.params["noise_sigma"]), rng, mu.size).reshape(mu.shape)

    def log_likelihood(self, theta, design, value):
        mu = self.mean_response(theta, design)
        return log_prob(normal(mu, self.params["noise_sigma"]), value)

    def _mu_cols(self, cols, design):
        a = np.asarray(cols["alpha"], dtype=np.float64)
        b = np.asarray(cols["beta"], dtype=np.float64)
        l = np.abs(np.asarray(cols["lam"], dtype=np.float64))
        return a - b * l ** design["age"]

    def mean_response_cols(self, cols, design):
        return self._mu_cols(cols, design)

    def loglik_bcast(self, cols, design, ys):
        mu = self._mu_cols(cols, design)
        s = self.params["noise_sigma"]
        z = (np.asarray(ys, dtype=np.float64) - mu) / s
        return -0.5 * z * z - math.log(s) - 0.5 * math.log(2.0 * math.pi)

    def goals(self):
        return [GoalSpec("length", "squared_error", "design",
                         "predict the mean length of a dugong at a chosen age")]

    def sample_goal_query(self, goal, theta, rng):
        d = self.random_design(rng)
        return Query(payload=d, truth=self.mean_response(theta, d))

    def describe(self, prior_framing: bool) -> str:
        amax = self.params["age_max"]
        if prior_framing:
            return (
                f"You are studying the growth of dugongs (sea cows). Choosing an age in [0, {amax:g}] "
                "returns the measured length of a dugong of that age, with measurement noise. Length "
                "increases with age and saturates."
            )
        return (
            f"You are probing a black-box function of one input in [0, {amax:g}]. Each query returns "
            "one noisy real value."
        )
