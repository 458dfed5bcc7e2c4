"""Moral dilemmas for autonomous vehicles: which group does a participant save.

Two groups of characters are at risk; the car either stays its course or
swerves, and saving group 1 requires the listed intervention. A simulated
participant decides via logistic regression over group-feature differences:

    logit = b_group + b_intervention * s(intervention)
          + sum_attr b_attr * (f_attr(group1) - f_attr(group2))

with s(swerve) = -1, s(stay) = 0 (an inaction preference penalizes the
swerving rescue). The per-character encoding table below is the single
source of truth for the feature map.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from ..dists import bernoulli, draw, log_prob, uniform
from ..rng import RngState
from .base import Design, Environment, GoalSpec, Query, register
from .verbalizer import verbalize_moral

# Per-character features: human, gender (F +1 / M -1), age (young +1 / old -1),
# status (+0.5 professional / -0.5 marginalized), fitness (athlete +1 / large -1),
# species (pet -1, human 0).
CHARACTERS: dict[str, dict[str, float]] = {
    "stroller":         {"human": 1, "gender": 0,  "age": 1,  "status": 0,    "fitness": 0,  "species": 0},
    "boy":              {"human": 1, "gender": -1, "age": 1,  "status": 0,    "fitness": 0,  "species": 0},
    "girl":             {"human": 1, "gender": 1,  "age": 1,  "status": 0,    "fitness": 0,  "species": 0},
    "pregnant_woman":   {"human": 1, "gender": 1,  "age": 0,  "status": 0,    "fitness": 0,  "species": 0},
    "male_doctor":      {"human": 1, "gender": -1, "age": 0,  "status": 0.5,  "fitness": 0,  "species": 0},
    "female_doctor":    {"human": 1, "gender": 1,  "age": 0,  "status": 0.5,  "fitness": 0,  "species": 0},
    "female_athlete":   {"human": 1, "gender": 1,  "age": 0,  "status": 0,    "fitness": 1,  "species": 0},
    "male_athlete":     {"human": 1, "gender": -1, "age": 0,  "status": 0,    "fitness": 1,  "species": 0},
    "female_executive": {"human": 1, "gender": 1,  "age": 0,  "status": 0.5,  "fitness": 0,  "species": 0},
    "male_executive":   {"human": 1, "gender": -1, "age": 0,  "status": 0.5,  "fitness": 0,  "species": 0},
    "large_woman":      {"human": 1, "gender": 1,  "age": 0,  "status": 0,    "fitness": -1, "species": 0},
    "large_man":        {"human": 1, "gender": -1, "age": 0,  "status": 0,    "fitness": -1, "species": 0},
    "homeless":         {"human": 1, "gender": 0,  "age": 0,  "status": -0.5, "fitness": 0,  "species": 0},
    "old_man":          {"human": 1, "gender": -1, "age": -1, "status": 0,    "fitness": 0,  "species": 0},
    "old_woman":        {"human": 1, "gender": 1,  "age": -1, "status": 0,    "fitness": 0,  "species": 0},
    "criminal":         {"human": 1, "gender": 0,  "age": 0,  "status": -0.5, "fitness": 0,  "species": 0},
    "dog":              {"human": 0, "gender": 0,  "age": 0,  "status": 0,    "fitness": 0,  "species": -1},
    "cat":              {"human": 0, "gender": 0,  "age": 0,  "status": 0,    "fitness": 0,  "species": -1},
}

# attribute name -> coefficient latent
ATTR_COEFFS = {
    "human": "beta_human_count",
    "gender": "beta_gender",
    "age": "beta_age",
    "status": "beta_social_status",
    "fitness": "beta_fitness",
    "species": "beta_species",
}

COEFF_NAMES = ("beta_intervention", "beta_group", "beta_gender", "beta_age",
               "beta_social_status", "beta_fitness", "beta_human_count", "beta_species")

INTERVENTIONS = ("swerve", "stay")


def group_features(roster) -> dict[str, float]:
    """Summed feature map over a roster of character names."""
    totals = {attr: 0.0 for attr in ATTR_COEFFS}
    for name in roster:
        feats = CHARACTERS.get(name)
        if feats is None:
            raise KeyError(f"unknown character '{name}'")
        for attr in totals:
            totals[attr] += feats[attr]
    return totals


def moral_logit(coeffs: Mapping[str, float], group1, group2, intervention: str) -> float:
    if intervention not in INTERVENTIONS:
        raise ValueError(f"intervention must be one of {INTERVENTIONS}")
    f1 = group_features(group1)
    f2 = group_features(group2)
    s = -1.0 if intervention == "swerve" else 0.0
    logit = coeffs["beta_group"] + coeffs["beta_intervention"] * s
    for attr, cname in ATTR_COEFFS.items():
        logit += coeffs[cname] * (f1[attr] - f2[attr])
    return logit


def moral_choice_prob(coeffs: Mapping[str, float], group1, group2, intervention: str) -> float:
    """Probability the participant chooses to save group 1."""
    return 1.0 / (1.0 + math.exp(-moral_logit(coeffs, group1, group2, intervention)))


@register
class MoralMachinesEnv(Environment):
    env_id = "moral_machines"

    @classmethod
    def default_params(cls):
        return {
            "max_group_size": 5,
            "coeff_low": -1.0,
            "coeff_high": 1.0,
        }

    def prior_specs(self):
        lo, hi = self.params["coeff_low"], self.params["coeff_high"]
        return {name: uniform(lo, hi) for name in COEFF_NAMES}

    def design_space(self):
        return {
            "fields": [
                {"name": "group1", "type": "choice_list", "choices": sorted(CHARACTERS),
                 "min_length": 1, "max_length": int(self.params["max_group_size"])},
                {"name": "group2", "type": "choice_list", "choices": sorted(CHARACTERS),
                 "min_length": 1, "max_length": int(self.params["max_group_size"])},
                {"name": "intervention", "type": "choice", "choices": list(INTERVENTIONS)},
            ],
            "constraints": [
                "every character must come from the declared roster",
                "intervention must be 'swerve' or 'stay'",
            ],
        }

    def parse_design(self, raw: Mapping) -> Design:
        from .base import InvalidDesignError
        d = {}
        for key in ("group1", "group2"):
            v = raw.get(key)
            if not isinstance(v, (list, tuple)) or not v:
                raise InvalidDesignError(f"design field '{key}' must be a nonempty list of characters")
            d[key] = tuple(str(x) for x in v)
        iv = raw.get("intervention")
        if not isinstance(iv, str):
            raise InvalidDesignError("design field 'intervention' must be a string")
        d["intervention"] = iv
        return d

    def validate_design(self, design):
        maxg = int(self.params["max_group_size"])
        for key in ("group1", "group2"):
            roster = design[key]
            if len(roster) > maxg:
                return f"{key} must have at most {maxg} characters"
            for name in roster:
                if name not in CHARACTERS:
                    return f"unknown character '{name}'"
        if design["intervention"] not in INTERVENTIONS:
            return "intervention must be 'swerve' or 'stay'"
        return None

    def random_design(self, rng: RngState) -> Design:
        names = sorted(CHARACTERS)
        maxg = int(self.params["max_group_size"])

        def roster():
            size = min(int(rng.uniform01() * maxg), maxg - 1) + 1
            return tuple(names[min(int(rng.uniform01() * len(names)), len(names) - 1)]
                         for _ in range(size))

        g1, g2 = roster(), roster()
        iv = INTERVENTIONS[0] if rng.uniform01() < 0.5 else INTERVENTIONS[1]
        return {"group1": g1, "group2": g2, "intervention": iv}

    def mean_response(self, theta, design):
        return moral_choice_prob(theta, design["group1"], design["group2"],
                                 design["intervention"])

    def simulate(self, theta, design, rng):
        return draw(bernoulli(self.mean_response(theta, design)), rng)

    def simulate_batch(self, cols, design, rng):
        p = self._prob_cols(cols, design)
        u = rng.uniform01_block(p.size).reshape(p.shape)
        return (u > 1.0 - p).astype(np.int64)

    def log_likelihood(self, theta, design, value):
        return log_prob(bernoulli(self.mean_response(theta, design)), value)

    def _logit_cols(self, cols, design):
        f1 = group_features(design["group1"])
        f2 = group_features(design["group2"])
        s = -1.0 if design["intervention"] == "swerve" else 0.0
        logit = np.asarray(cols["beta_group"], dtype=np.float64) + \
            np.asarray(cols["beta_intervention"], dtype=np.float64) * s
        for attr, cname in ATTR_COEFFS.items():
            logit = logit + np.asarray(cols[cname], dtype=np.float64) * (f1[attr] - f2[attr])
        return logit

    def _prob_cols(self, cols, design):
        return 1.0 / (1.0 + np.exp(-self._logit_cols(cols, design)))

    def mean_response_cols(self, cols, design):
        return self._prob_cols(cols, design)

    def loglik_bcast(self, cols, design, ys):
        from .base import bernoulli_loglik_from_logit
        return bernoulli_loglik_from_logit(self._logit_cols(cols, design), ys)

    def observation_text(self, theta, design, value):
        contributions = self._attr_contributions(theta, design)
        text = verbalize_moral(int(value), contributions,
                               mode=self.config.verbalizer,
                               endpoint=self.config.verbalizer_endpoint)
        meta = (("verbalizer_fallback", True),) if text.fallback else ()
        return text.text, meta

    def _attr_contributions(self, theta, design) -> dict[str, float]:
        f1 = group_features(design["group1"])
        f2 = group_features(design["group2"])
        s = -1.0 if design["intervention"] == "swerve" else 0.0
        out = {"group": theta["beta_group"],
               "intervention": theta["beta_intervention"] * s}
        for attr, cname in ATTR_COEFFS.items():
            out[attr] = theta[cname] * (f1[attr] - f2[attr])
        return out

    def goals(self):
        return [GoalSpec("moral_judgement", "zero_one", "design",
                         "predict which group the participant chooses to save")]

    def sample_goal_query(self, goal, theta, rng):
        d = self.random_design(rng)
        truth = 1 if self.mean_response(theta, d) > 0.5 else 0
        return Query(payload=d, truth=truth)

    def describe(self, prior_framing: bool) -> str:
        roster = ", ".join(sorted(CHARACTERS))
        if prior_framing:
            return (
                "You are observing a participant judging moral dilemmas for an autonomous car. Two groups "
                "of characters are at risk; the car saves group 1 either by staying its course or by "
                "swerving, and the other group dies. You compose both groups from this roster: "
                f"{roster}. The participant answers which group to save (1 means group 1)."
            )
        return (
            "You are probing a black-box binary chooser. You submit two nonempty lists of labels drawn "
            f"from a fixed set of 18 ({roster}) and a mode flag ('swerve' or 'stay'). The system returns "
            "1 or 2 for which list it favors, with a one-sentence rationale."
        )
