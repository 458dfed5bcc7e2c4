"""Emotion judgements after a wheel-of-fortune spin.

A participant watches a player spin a wheel with three known prizes and
probabilities, sees the outcome, and rates 8 emotions on a 1..9 Likert
scale. Per emotion the latent regression gives

    mean = a + b_win * win + b_pe * PE + b_abspe * |PE|

with win the outcome's value, PE = win - expected value. Ratings are a
normal draw around the mean, clamped to [1, 9] and rounded to integers.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np
from scipy import special as sp

from ..dists import draw, normal
from ..rng import RngState
from .base import Design, Environment, GoalSpec, Query, design_int, register
from .verbalizer import verbalize_emotions

EMOTIONS = ("happiness", "sadness", "anger", "surprise",
            "fear", "disgust", "contentment", "disappointment")

_SQRT2 = math.sqrt(2.0)


def emotion_means(coeff_block: Mapping[str, float], prizes, probs, outcome_index: int):
    """Per-emotion regression means for one spin.

    ``coeff_block`` maps e.g. ``happiness_alpha``, ``happiness_beta_win``,
    ``happiness_beta_pe``, ``happiness_beta_abspe`` for each emotion.
    Returns (means tuple, win, pe).
    """
    if abs(sum(probs) - 1.0) > 1e-9:
        raise ValueError("probs must sum to 1")
    if outcome_index not in (1, 2, 3):
        raise ValueError("outcome_index must be 1, 2, or 3")
    win = prizes[outcome_index - 1]
    ev = sum(p * v for p, v in zip(probs, prizes))
    pe = win - ev
    abspe = abs(pe)
    means = tuple(
        coeff_block[f"{e}_alpha"]
        + coeff_block[f"{e}_beta_win"] * win
        + coeff_block[f"{e}_beta_pe"] * pe
        + coeff_block[f"{e}_beta_abspe"] * abspe
        for e in EMOTIONS
    )
    return means, win, pe


def likert_cell_logprobs(mean, sigma: float) -> np.ndarray:
    """Log mass of each Likert value 1..9 for a clamped, rounded normal.

    ``mean`` may be scalar or an array; the result appends an axis of
    length 9.
    """
    m = np.asarray(mean, dtype=np.float64)[..., None]
    edges = np.arange(1.5, 9.0, 1.0)  # 1.5 .. 8.5
    cdf = 0.5 * (1.0 + sp.erf((edges - m) / (sigma * _SQRT2)))
    lower = np.concatenate([np.zeros_like(m), cdf], axis=-1)
    upper = np.concatenate([cdf, np.ones_like(m)], axis=-1)
    return np.log(np.maximum(upper - lower, 1e-300))


@register
class EmotionsEnv(Environment):
    env_id = "emotions"

    @classmethod
    def default_params(cls):
        return {
            "prize_max": 100.0,
            "noise_sigma": 0.75,
            "alpha_mean": 5.0, "alpha_sigma": 1.0,
            "beta_sigma": 0.05,   # shared prior scale for all slope terms
        }

    def prior_specs(self):
        p = self.params
        specs = {}
        for e in EMOTIONS:
            specs[f"{e}_alpha"] = normal(p["alpha_mean"], p["alpha_sigma"])
            specs[f"{e}_beta_win"] = normal(0.0, p["beta_sigma"])
            specs[f"{e}_beta_pe"] = normal(0.0, p["beta_sigma"])
            specs[f"{e}_beta_abspe"] = normal(0.0, p["beta_sigma"])
        return specs

    def design_space(self):
        pmax = self.params["prize_max"]
        return {
            "fields": [
                {"name": "prizes", "type": "float_list", "length": 3, "low": 0.0, "high": pmax},
                {"name": "probs", "type": "float_list", "length": 3, "low": 0.0, "high": 1.0},
                {"name": "outcome", "type": "int", "low": 1, "high": 3},
            ],
            "constraints": [
                "probs must sum to 1",
                "outcome must be 1, 2, or 3",
            ],
        }

    def parse_design(self, raw: Mapping) -> Design:
        from .base import InvalidDesignError
        d = {}
        for key in ("prizes", "probs"):
            v = raw.get(key)
            if not isinstance(v, (list, tuple)) or len(v) != 3:
                raise InvalidDesignError(f"design field '{key}' must be a list of 3 numbers")
            try:
                d[key] = tuple(float(x) for x in v)
            except (TypeError, ValueError):
                raise InvalidDesignError(f"design field '{key}' must be a list of 3 numbers") from None
        d["outcome"] = design_int(raw, "outcome")
        return d

    def validate_design(self, design):
        pmax = self.params["prize_max"]
        for v in design["prizes"]:
            if not 0.0 <= v <= pmax:
                return f"prizes must be within [0, {pmax:g}]"
        for p in design["probs"]:
            if not 0.0 <= p <= 1.0:
                return "probs must be within [0, 1]"
        if abs(sum(design["probs"]) - 1.0) > 1e-9:
            return "probs must sum to 1"
        if design["outcome"] not in (1, 2, 3):
            return "outcome must be 1, 2, or 3"
        return None

    def random_design(self, rng: RngState) -> Design:
        pmax = self.params["prize_max"]
        prizes = tuple(pmax * rng.uniform01() for _ in range(3))
        u1, u2 = rng.uniform01(), rng.uniform01()
        a, b = (u1, u2) if u1 <= u2 else (u2, u1)
        probs = (a, b - a, 1.0 - b)
        outcome = min(int(rng.uniform01() * 3), 2) + 1
        return {"prizes": prizes, "probs": probs, "outcome": outcome}

    def _means(self, theta, design):
        means, _, _ = emotion_means(theta, design["prizes"], design["probs"], design["outcome"])
        return means

    def mean_response(self, theta, design):
        # Clamp to the reporting scale; this is the noiseless prediction target.
        return tuple(min(max(m, 1.0), 9.0) for m in self._means(theta, design))

    def simulate(self, theta, design, rng):
        sigma = self.params["noise_sigma"]
        out = []
        for m in self._means(theta, design):
            x = m + draw(normal(0.0, sigma), rng)
            out.append(int(math.floor(min(max(x, 1.0), 9.0) + 0.5)))
        return tuple(out)

    def simulate_batch(self, cols, design, rng):
        from ..dists import draw_block
        sigma = self.params["noise_sigma"]
        mu = self._mean_cols(cols, design)          # (..., 8)
        noise = draw_block(normal(0.0, sigma), rng, mu.size).reshape(mu.shape)
        return np.floor(np.clip(mu + noise, 1.0, 9.0) + 0.5).astype(np.int64)

    def log_likelihood(self, theta, design, value):
        sigma = self.params["noise_sigma"]
        means = self._means(theta, design)
        total = 0.0
        for m, v in zip(means, value):
            if v != int(v) or not 1 <= v <= 9:
                return -math.inf
            cell = likert_cell_logprobs(m, sigma)[int(v) - 1]
            total += float(cell)
        return total

    def _mean_cols(self, cols, design):
        means, _, _ = emotion_means(
            {k: np.asarray(v, dtype=np.float64) for k, v in cols.items()},
            design["prizes"], design["probs"], design["outcome"])
        return np.stack(np.broadcast_arrays(*means), axis=-1)

    def mean_response_cols(self, cols, design):
        return np.clip(self._mean_cols(cols, design), 1.0, 9.0)

    def loglik_bcast(self, cols, design, ys):
        sigma = self.params["noise_sigma"]
        mu = self._mean_cols(cols, design)           # (..., 8)
        y = np.asarray(ys, dtype=np.int64)           # (..., 8)
        cells = likert_cell_logprobs(mu, sigma)      # (..., 8, 9)
        idx = np.clip(y, 1, 9) - 1
        picked = np.take_along_axis(cells, np.broadcast_to(idx, mu.shape)[..., None], axis=-1)[..., 0]
        ok = (y >= 1) & (y <= 9)
        return np.where(ok, picked, -np.inf).sum(axis=-1)

    def observation_text(self, theta, design, value):
        _, win, pe = emotion_means(theta, design["prizes"], design["probs"], design["outcome"])
        text = verbalize_emotions(dict(zip(EMOTIONS, value)), pe,
                                  mode=self.config.verbalizer,
                                  endpoint=self.config.verbalizer_endpoint)
        meta = (("pe", float(pe)), ("win", float(win)))
        if text.fallback:
            meta = meta + (("verbalizer_fallback", True),)
        return text.text, meta

    def goals(self):
        return [GoalSpec("emotion_likert", "vector_mse", "design",
                         "predict the participant's 8 emotion ratings for a spin")]

    def sample_goal_query(self, goal, theta, rng):
        d = self.random_design(rng)
        return Query(payload=d, truth=self.mean_response(theta, d))

    def describe(self, prior_framing: bool) -> str:
        pmax = self.params["prize_max"]
        if prior_framing:
            return (
                "You are observing a participant who watches a player spin a prize wheel with three "
                f"monetary outcomes (each within [0, {pmax:g}]) and known probabilities. After seeing which "
                "outcome occurred, the participant reports how the player might feel: ratings from 1 to 9 "
                "for happiness, sadness, anger, surprise, fear, disgust, contentment, and disappointment. "
                "You choose the prizes, the probabilities, and the outcome shown."
            )
        return (
            f"You are probing a black-box rater. You submit three values in [0, {pmax:g}], three weights "
            "that sum to 1, and an index 1-3. The system returns eight integers between 1 and 9, plus a "
            "short sentence describing them."
        )
