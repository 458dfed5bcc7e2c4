"""Hyperbolic temporal discounting of delayed rewards.

A participant with latents (log k, alpha) chooses between an immediate
reward iR and a delayed reward dR paid after D days. The delayed option is
valued V_d = dR / (1 + k D) against V_i = iR, and the choice is

    P(delayed) = eps + (1 - 2 eps) * Phi((V_d - V_i) / alpha)
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np
from scipy import special as sp

from ..dists import bernoulli, draw, half_normal, log_prob, normal, std_normal_cdf
from ..rng import RngState
from .base import Design, Environment, GoalSpec, Query, design_float, register

_SQRT2 = math.sqrt(2.0)


def hd_choice_prob(k: float, alpha: float, iR: float, dR: float, D: float,
                   eps: float = 0.01) -> float:
    """Probability of choosing the delayed reward."""
    v_d = dR / (1.0 + k * D)
    v_i = iR
    if alpha <= 0.0:
        step = 0.5 if v_d == v_i else (1.0 if v_d > v_i else 0.0)
        return eps + (1.0 - 2.0 * eps) * step
    return eps + (1.0 - 2.0 * eps) * std_normal_cdf((v_d - v_i) / alpha)


@register
class HyperbolicDiscountingEnv(Environment):
    env_id = "hyperbolic_discounting"

    @classmethod
    def default_params(cls):
        return {
            "eps": 0.01,
            "log_k_mean": -4.25,
            "log_k_sigma": 1.5,
            "alpha_scale": 2.0,
            "reward_max": 100.0,
            "delay_max": 365.0,
        }

    def prior_specs(self):
        return {
            "log_k": normal(self.params["log_k_mean"], self.params["log_k_sigma"]),
            "alpha": half_normal(self.params["alpha_scale"]),
        }

    def design_space(self):
        rmax, dmax = self.params["reward_max"], self.params["delay_max"]
        return {
            "fields": [
                {"name": "iR", "type": "float", "low": 0.0, "high": rmax, "low_open": True},
                {"name": "dR", "type": "float", "low": 0.0, "high": rmax, "low_open": True},
                {"name": "D", "type": "float", "low": 0.0, "high": dmax, "low_open": True},
            ],
            "constraints": [
                "iR, dR, and D must all be positive",
                "iR must be strictly less than dR",
            ],
        }

    def parse_design(self, raw: Mapping) -> Design:
        return {"iR": design_float(raw, "iR"),
                "dR": design_float(raw, "dR"),
                "D": design_float(raw, "D")}

    def validate_design(self, design):
        iR, dR, D = design["iR"], design["dR"], design["D"]
        if iR <= 0 or dR <= 0 or D <= 0:
            return "iR, dR, and D must all be positive"
        if iR >= dR:
            return "iR must be strictly less than dR"
        if dR > self.params["reward_max"]:
            return f"dR must be at most {self.params['reward_max']:g}"
        if D > self.params["delay_max"]:
            return f"D must be at most {self.params['delay_max']:g}"
        return None

    def random_design(self, rng: RngState) -> Design:
        rmax, dmax = self.params["reward_max"], self.params["delay_max"]
        a = rmax * rng.uniform01()
        b = rmax * rng.uniform01()
        lo, hi = (a, b) if a <= b else (b, a)
        return {"iR": lo, "dR": hi, "D": dmax * rng.uniform01()}

    def _choice_prob(self, theta, design) -> float:
        return hd_choice_prob(math.exp(theta["log_k"]), theta["alpha"],
                              design["iR"], design["dR"], design["D"],
                              self.params["eps"])

    def mean_response(self, theta, design):
        return self._choice_prob(theta, design)

    def simulate(self, theta, design, rng):
        return draw(bernoulli(self._choice_prob(theta, design)), rng)

    def simulate_batch(self, cols, design, rng):
        p = self._prob_cols(cols, design)
        u = rng.uniform01_block(p.size).reshape(p.shape)
        return (u > 1.0 - p).astype(np.int64)

    def log_likelihood(self, theta, design, value):
        return log_prob(bernoulli(self._choice_prob(theta, design)), value)

    def _prob_cols(self, cols, design):
        eps = self.params["eps"]
        k = np.exp(np.asarray(cols["log_k"], dtype=np.float64))
        alpha = np.asarray(cols["alpha"], dtype=np.float64)
        v_d = design["dR"] / (1.0 + k * design["D"])
        z = (v_d - design["iR"]) / np.where(alpha > 0, alpha, np.finfo(float).tiny)
        return eps + (1.0 - 2.0 * eps) * 0.5 * (1.0 + sp.erf(z / _SQRT2))

    def mean_response_cols(self, cols, design):
        return self._prob_cols(cols, design)

    def loglik_bcast(self, cols, design, ys):
        p = self._prob_cols(cols, design)
        y = np.asarray(ys, dtype=np.float64)
        return y * np.log(p) + (1.0 - y) * np.log1p(-p)

    def goals(self):
        return [
            GoalSpec("choice", "zero_one", "design",
                     "predict whether the participant picks the delayed reward"),
            GoalSpec("discount_factor", "squared_error", "latent",
                     "predict the participant's discount factor k"),
        ]

    def sample_goal_query(self, goal, theta, rng):
        if goal.goal_id == "discount_factor":
            return Query(payload={"target": "discount_factor"},
                         truth=math.exp(theta["log_k"]))
        d = self.random_design(rng)
        truth = 1 if self._choice_prob(theta, d) > 0.5 else 0
        return Query(payload=d, truth=truth)

    def describe(self, prior_framing: bool) -> str:
        rmax, dmax = self.params["reward_max"], self.params["delay_max"]
        if prior_framing:
            return (
                "You are observing how participants balance delayed vs immediate rewards. "
                f"In each experiment a participant chooses between receiving iR dollars now and "
                f"dR dollars after D days (0 < iR < dR <= {rmax:g}, 0 < D <= {dmax:g}). "
                "The response is 1 if the participant picks the delayed reward and 0 otherwise."
            )
        return (
            "You are probing a black-box binary response. In each experiment you receive a tuple of "
            f"three values to fill in: x1, x2, x3, with 0 < x1 < x2 <= {rmax:g} and 0 < x3 <= {dmax:g} "
            "(fields iR, dR, D). The process answers 0 or 1."
        )
