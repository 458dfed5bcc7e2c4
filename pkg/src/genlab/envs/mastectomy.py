"""Post-mastectomy survival: logistic hazard over time since surgery.

Each episode samples a patient cohort (time since surgery, metastasis
status). For a chosen patient the death probability is

    lam = exp(beta * metastasized) * lam0
    p(death) = logistic(time_since_surgery * lam)

and the observation is a Bernoulli death indicator.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from ..dists import bernoulli, draw, half_normal, log_prob, normal
from ..rng import RngState
from .base import (
    Design,
    Environment,
    GoalSpec,
    Query,
    bernoulli_loglik_from_logit,
    design_int,
    register,
)


def mastectomy_death_prob(lambda0: float, beta: float, metastasized: int,
                          time_since_surgery: float) -> float:
    """Death probability for the given covariates."""
    if lambda0 <= 0:
        raise ValueError("lambda0 must be > 0")
    if time_since_surgery < 0:
        raise ValueError("time_since_surgery must be >= 0")
    lam = math.exp(beta * metastasized) * lambda0
    mu = time_since_surgery * lam
    return 1.0 / (1.0 + math.exp(-mu))


@register
class MastectomyEnv(Environment):
    env_id = "mastectomy"

    @classmethod
    def default_params(cls):
        return {
            "num_patients": 100,
            "time_upper_bound": 10.0,
            "lambda0_scale": 0.2,
            "beta_mean": 1.0,
            "beta_sigma": 0.5,
            "metastasis_rate": 0.5,
        }

    def prior_specs(self):
        from ..dists import bernoulli as bern, uniform as unif
        specs = {
            "lambda0": half_normal(self.params["lambda0_scale"]),
            "beta": normal(self.params["beta_mean"], self.params["beta_sigma"]),
        }
        for i in range(int(self.params["num_patients"])):
            specs[f"patient_{i}_time"] = unif(0.0, self.params["time_upper_bound"])
            specs[f"patient_{i}_meta"] = bern(self.params["metastasis_rate"])
        return specs

    def _covariates(self, theta, patient: int):
        return theta[f"patient_{patient}_time"], theta[f"patient_{patient}_meta"]

    def design_space(self):
        n = int(self.params["num_patients"])
        return {
            "fields": [{"name": "patient", "type": "int", "low": 0, "high": n - 1}],
            "constraints": [f"patient must be in [0, {n - 1}]"],
        }

    def parse_design(self, raw: Mapping) -> Design:
        return {"patient": design_int(raw, "patient")}

    def validate_design(self, design):
        n = int(self.params["num_patients"])
        if not 0 <= design["patient"] < n:
            return f"patient must be in [0, {n - 1}]"
        return None

    def random_design(self, rng: RngState) -> Design:
        n = int(self.params["num_patients"])
        return {"patient": min(int(rng.uniform01() * n), n - 1)}

    def _prob(self, theta, design):
        t, m = self._covariates(theta, design["patient"])
        return mastectomy_death_prob(theta["lambda0"], theta["beta"], int(m), t)

    def mean_response(self, theta, design):
        return self._prob(theta, design)

    def simulate(self, theta, design, rng):
        return draw(bernoulli(self._prob(theta, design)), rng)

    def simulate_batch(self, cols, design, rng):
        p = self._prob_cols(cols, design)
        u = rng.uniform01_block(p.size).reshape(p.shape)
        return (u > 1.0 - p).astype(np.int64)

    def log_likelihood(self, theta, design, value):
        return log_prob(bernoulli(self._prob(theta, design)), value)

    def _logit_cols(self, cols, design):
        i = design["patient"]
        t = np.asarray(cols[f"patient_{i}_time"], dtype=np.float64)
        m = np.asarray(cols[f"patient_{i}_meta"], dtype=np.float64)
        lam = np.exp(np.asarray(cols["beta"], dtype=np.float64) * m) * \
            np.asarray(cols["lambda0"], dtype=np.float64)
        return t * lam

    def _prob_cols(self, cols, design):
        return 1.0 / (1.0 + np.exp(-self._logit_cols(cols, design)))

    def mean_response_cols(self, cols, design):
        return self._prob_cols(cols, design)

    def loglik_bcast(self, cols, design, ys):
        return bernoulli_loglik_from_logit(self._logit_cols(cols, design), ys)

    def observation_text(self, theta, design, value):
        t, m = self._covariates(theta, design["patient"])
        status = "flag=1" if m else "flag=0"
        outcome = 1 if value else 0
        return (f"subject {design['patient']}: elapsed={t!r}, {status}, outcome={outcome}"), ()

    def goals(self):
        return [GoalSpec("survival", "zero_one", "design",
                         "predict the survival outcome for a chosen patient")]

    def sample_goal_query(self, goal, theta, rng):
        d = self.random_design(rng)
        t, m = self._covariates(theta, d["patient"])
        truth = 1 if self._prob(theta, d) > 0.5 else 0
        payload = {"patient": d["patient"], "time_since_surgery": t, "metastasized": int(m)}
        return Query(payload=payload, truth=truth)

    def describe(self, prior_framing: bool) -> str:
        n = int(self.params["num_patients"])
        ub = self.params["time_upper_bound"]
        if prior_framing:
            return (
                f"You are studying survival after mastectomy in a cohort of {n} breast cancer patients. "
                f"Each patient has a known time since surgery (up to {ub:g} years) and a known metastasis "
                "status. Choosing a patient index reveals whether that patient has died (1) or is alive (0)."
            )
        return (
            f"You are probing a black-box binary response over {n} items. Each item has two known "
            "attributes: a real value and a binary flag. Submitting an item index returns 0 or 1."
        )
