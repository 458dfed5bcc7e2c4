"""Item response theory: students answering exam questions.

Correctness of student j on question k is Bernoulli(p_jk) with
z = gamma_k * (ability_j - difficulty_k):

    1PL: gamma = 1, p = logistic(z)
    2PL: p = logistic(z)                (default variant)
    3PL: p = c_k + (1 - c_k) * logistic(z)
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from ..dists import bernoulli, draw, half_normal, log_prob, normal, uniform
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

VARIANTS = ("1pl", "2pl", "3pl")


def irt_correct_prob(variant: str, alpha_j: float, beta_k: float,
                     gamma_k: float = 1.0, c_k: float = 0.0) -> float:
    """Probability of a correct response under the given model variant."""
    v = variant.lower()
    if v not in VARIANTS:
        raise ValueError(f"unknown IRT variant {variant!r}")
    z = (alpha_j - beta_k) if v == "1pl" else gamma_k * (alpha_j - beta_k)
    base = 1.0 / (1.0 + math.exp(-z))
    if v == "3pl":
        return c_k + (1.0 - c_k) * base
    return base


@register
class IrtEnv(Environment):
    env_id = "irt"

    @classmethod
    def default_params(cls):
        return {
            "num_students": 6,
            "num_questions": 6,
            "discrim_shift": 0.5,   # gamma_k = shift + half_normal(scale)
            "discrim_scale": 1.0,
            "guess_max": 0.4,       # 3PL: c_k ~ uniform(0, guess_max)
        }

    def __init__(self, config):
        super().__init__(config)
        self.variant = (config.variant or "2pl").lower()
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown IRT variant {config.variant!r}")

    def prior_specs(self):
        s = int(self.params["num_students"])
        q = int(self.params["num_questions"])
        specs = {}
        for j in range(s):
            specs[f"ability_{j}"] = normal(0.0, 1.0)
        for k in range(q):
            specs[f"difficulty_{k}"] = normal(0.0, 1.0)
        if self.variant in ("2pl", "3pl"):
            for k in range(q):
                specs[f"discrim_{k}"] = half_normal(self.params["discrim_scale"])
        if self.variant == "3pl":
            for k in range(q):
                specs[f"guess_{k}"] = uniform(0.0, self.params["guess_max"])
        return specs

    def sample_theta(self, rng):
        theta = super().sample_theta(rng)
        if self.variant in ("2pl", "3pl"):
            for k in range(int(self.params["num_questions"])):
                theta[f"discrim_{k}"] += self.params["discrim_shift"]
        return theta

    def sample_theta_block(self, rng, size):
        cols = super().sample_theta_block(rng, size)
        if self.variant in ("2pl", "3pl"):
            for k in range(int(self.params["num_questions"])):
                cols[f"discrim_{k}"] = cols[f"discrim_{k}"] + self.params["discrim_shift"]
        return cols

    def design_space(self):
        s = int(self.params["num_students"])
        q = int(self.params["num_questions"])
        return {
            "fields": [
                {"name": "student", "type": "int", "low": 0, "high": s - 1},
                {"name": "question", "type": "int", "low": 0, "high": q - 1},
            ],
            "constraints": [f"student must be in [0, {s - 1}]",
                            f"question must be in [0, {q - 1}]"],
        }

    def parse_design(self, raw: Mapping) -> Design:
        return {"student": design_int(raw, "student"),
                "question": design_int(raw, "question")}

    def validate_design(self, design):
        s = int(self.params["num_students"])
        q = int(self.params["num_questions"])
        if not 0 <= design["student"] < s:
            return f"student must be in [0, {s - 1}]"
        if not 0 <= design["question"] < q:
            return f"question must be in [0, {q - 1}]"
        return None

    def random_design(self, rng: RngState) -> Design:
        s = int(self.params["num_students"])
        q = int(self.params["num_questions"])
        return {"student": min(int(rng.uniform01() * s), s - 1),
                "question": min(int(rng.uniform01() * q), q - 1)}

    def _prob(self, theta, design) -> float:
        j, k = design["student"], design["question"]
        return irt_correct_prob(
            self.variant,
            theta[f"ability_{j}"],
            theta[f"difficulty_{k}"],
            theta.get(f"discrim_{k}", 1.0),
            theta.get(f"guess_{k}", 0.0),
        )

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
        j, k = design["student"], design["question"]
        a = np.asarray(cols[f"ability_{j}"], dtype=np.float64)
        b = np.asarray(cols[f"difficulty_{k}"], dtype=np.float64)
        z = a - b
        if self.variant in ("2pl", "3pl"):
            z = np.asarray(cols[f"discrim_{k}"], dtype=np.float64) * z
        return z

    def _prob_cols(self, cols, design):
        base = 1.0 / (1.0 + np.exp(-self._logit_cols(cols, design)))
        if self.variant == "3pl":
            c = np.asarray(cols[f"guess_{design['question']}"], dtype=np.float64)
            return c + (1.0 - c) * base
        return base

    def mean_response_cols(self, cols, design):
        return self._prob_cols(cols, design)

    def loglik_bcast(self, cols, design, ys):
        if self.variant == "3pl":
            # guessing floor keeps p inside (c, 1); the direct form is safe
            p = np.clip(self._prob_cols(cols, design), 1e-300, 1.0 - 1e-16)
            y = np.asarray(ys, dtype=np.float64)
            return y * np.log(p) + (1.0 - y) * np.log1p(-p)
        return bernoulli_loglik_from_logit(self._logit_cols(cols, design), ys)

    def goals(self):
        return [GoalSpec("correctness", "zero_one", "design",
                         "predict whether a student answers a question correctly")]

    def sample_goal_query(self, goal, theta, rng):
        d = self.random_design(rng)
        truth = 1 if self._prob(theta, d) > 0.5 else 0
        return Query(payload=d, truth=truth)

    def describe(self, prior_framing: bool) -> str:
        s = int(self.params["num_students"])
        q = int(self.params["num_questions"])
        if prior_framing:
            return (
                f"You are studying how {s} students perform on an exam with {q} questions. "
                "Each experiment picks a (student, question) pair and reveals whether that student "
                "answers that question correctly. Stronger students and easier questions make a correct "
                "answer more likely."
            )
        return (
            f"You are probing a black-box binary matrix. Submitting a pair of indices (first in "
            f"[0, {s - 1}], second in [0, {q - 1}]) returns 0 or 1. Repeated submissions of the same "
            "pair can differ."
        )
