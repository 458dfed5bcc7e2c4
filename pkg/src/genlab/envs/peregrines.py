"""Peregrine falcon population counts: cubic Poisson regression in time.

log rate = a + b1 t + b2 t^2 + b3 t^3, counts ~ Poisson(exp(log rate)).
The log rate is clamped at LOG_RATE_CAP to keep draws finite; clamped
observations carry a flag.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np
from scipy import special as sp

from ..dists import draw, log_prob, normal, poisson
from ..rng import RngState
from .base import Design, Environment, GoalSpec, Query, design_float, register

LOG_RATE_CAP = 20.0


def peregrine_log_rate(coeffs, t: float) -> float:
    """Clamped log mean count at time ``t``; coeffs = (a, b1, b2, b3)."""
    a, b1, b2, b3 = coeffs
    raw = a + b1 * t + b2 * t * t + b3 * t * t * t
    return min(raw, LOG_RATE_CAP)


@register
class PeregrinesEnv(Environment):
    env_id = "peregrines"

    @classmethod
    def default_params(cls):
        return {
            "t_max": 5.0,
            "a_mean": 4.0, "a_sigma": 0.5,
            "b1_mean": 1.5, "b1_sigma": 0.5,
            "b2_mean": -0.8, "b2_sigma": 0.3,
            "b3_mean": 0.1, "b3_sigma": 0.1,
        }

    def prior_specs(self):
        p = self.params
        return {
            "a": normal(p["a_mean"], p["a_sigma"]),
            "b1": normal(p["b1_mean"], p["b1_sigma"]),
            "b2": normal(p["b2_mean"], p["b2_sigma"]),
            "b3": normal(p["b3_mean"], p["b3_sigma"]),
        }

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

    def _coeffs(self, theta):
        return (theta["a"], theta["b1"], theta["b2"], theta["b3"])

    def mean_response(self, theta, design):
        return math.exp(peregrine_log_rate(self._coeffs(theta), design["t"]))

    def simulate(self, theta, design, rng):
        return draw(poisson(self.mean_response(theta, design)), rng)

    def simulate_batch(self, cols, design, rng):
        from ..dists import _poisson_quantile, _poisson_quantile_arr
        rate = np.exp(self._lograte_cols(cols, design))
        u = rng.uniform01_block(rate.size).reshape(rate.shape)
        flat_r = rate.ravel()
        flat_u = u.ravel()
        if np.all(flat_r == flat_r[0]):
            return _poisson_quantile_arr(float(flat_r[0]), flat_u).reshape(rate.shape)
        flat = np.fromiter(
            (_poisson_quantile(r, uu) for r, uu in zip(flat_r, flat_u)),
            dtype=np.int64, count=rate.size)
        return flat.reshape(rate.shape)

    def log_likelihood(self, theta, design, value):
        return log_prob(poisson(self.mean_response(theta, design)), value)

    def _lograte_cols(self, cols, design):
        t = design["t"]
        raw = (np.asarray(cols["a"], dtype=np.float64)
               + np.asarray(cols["b1"], dtype=np.float64) * t
               + np.asarray(cols["b2"], dtype=np.float64) * t * t
               + np.asarray(cols["b3"], dtype=np.float64) * t * t * t)
        return np.minimum(raw, LOG_RATE_CAP)

    def mean_response_cols(self, cols, design):
        return np.exp(self._lograte_cols(cols, design))

    def loglik_bcast(self, cols, design, ys):
        lograte = self._lograte_cols(cols, design)
        y = np.asarray(ys, dtype=np.float64)
        return y * lograte - np.exp(lograte) - sp.gammaln(y + 1.0)

    def observation_text(self, theta, design, value):
        raw = (theta["a"] + theta["b1"] * design["t"]
               + theta["b2"] * design["t"] ** 2 + theta["b3"] * design["t"] ** 3)
        meta = (("rate_clamped", True),) if raw > LOG_RATE_CAP else ()
        return f"result: {int(value)}", meta

    def goals(self):
        return [GoalSpec("population", "squared_error", "design",
                         "predict the expected population count at a chosen time")]

    def sample_goal_query(self, goal, theta, rng):
        d = self.random_design(rng)
        return Query(payload=d, truth=self.mean_response(theta, d))

    def describe(self, prior_framing: bool) -> str:
        tmax = self.params["t_max"]
        if prior_framing:
            return (
                "You are studying how a population of peregrine falcons changes over time. "
                f"Choosing a time in [0, {tmax:g}] returns the observed population count at that time. "
                "The underlying trend is smooth but can rise and fall."
            )
        return (
            f"You are probing a black-box counter over one input in [0, {tmax:g}]. Each query returns "
            "a nonnegative integer whose typical size varies smoothly with the input."
        )
