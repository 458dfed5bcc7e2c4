"""Location finding: superimposed inverse-square signals in the unit square.

K hidden sources at theta_k emit with fixed strength alpha_k; a measurement
at point xi observes N(mu, sigma) with

    mu = b + sum_k alpha_k / (m + ||theta_k - xi||^2)
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from ..dists import DistributionSpec, log_prob, normal, uniform
from ..rng import RngState
from .base import Design, Environment, GoalSpec, Query, design_float, register


def loc_signal_mean(sources, alphas, point, b: float, m: float) -> float:
    """Total mean signal at ``point``; ``m > 0`` caps the on-source value."""
    if m <= 0:
        raise ValueError("m must be > 0")
    px, py = point
    total = b
    for (sx, sy), a in zip(sources, alphas):
        total += a / (m + (sx - px) ** 2 + (sy - py) ** 2)
    return total


@register
class LocationFindingEnv(Environment):
    env_id = "location_finding"

    @classmethod
    def default_params(cls):
        return {
            "num_sources": 3,
            "alpha": 1.0,          # shared emission strength
            "base_signal": 0.1,
            "max_signal": 1e-4,    # additive floor in the inverse-square law
            "noise_sigma": 0.5,
            "grid_low": 0.0,
            "grid_high": 1.0,
        }

    def prior_specs(self):
        lo, hi = self.params["grid_low"], self.params["grid_high"]
        specs = {}
        for k in range(int(self.params["num_sources"])):
            specs[f"source_{k}_x"] = uniform(lo, hi)
            specs[f"source_{k}_y"] = uniform(lo, hi)
        return specs

    def _sources(self, theta):
        ks = range(int(self.params["num_sources"]))
        return [(theta[f"source_{k}_x"], theta[f"source_{k}_y"]) for k in ks]

    def design_space(self):
        lo, hi = self.params["grid_low"], self.params["grid_high"]
        return {
            "fields": [
                {"name": "x", "type": "float", "low": lo, "high": hi},
                {"name": "y", "type": "float", "low": lo, "high": hi},
            ],
            "constraints": ["x and y must be within the measurement grid"],
        }

    def parse_design(self, raw: Mapping) -> Design:
        return {"x": design_float(raw, "x"), "y": design_float(raw, "y")}

    def validate_design(self, design):
        lo, hi = self.params["grid_low"], self.params["grid_high"]
        for f in ("x", "y"):
            if not lo <= design[f] <= hi:
                return f"{f} must be within [{lo:g}, {hi:g}]"
        return None

    def random_design(self, rng: RngState) -> Design:
        lo, hi = self.params["grid_low"], self.params["grid_high"]
        return {"x": lo + (hi - lo) * rng.uniform01(),
                "y": lo + (hi - lo) * rng.uniform01()}

    def mean_response(self, theta, design):
        alphas = [self.params["alpha"]] * int(self.params["num_sources"])
        return loc_signal_mean(self._sources(theta), alphas, (design["x"], design["y"]),
                               self.params["base_signal"], self.params["max_signal"])

    def _noise(self) -> DistributionSpec:
        return normal(0.0, self.params["noise_sigma"])

    def simulate(self, theta, design, rng):
        from ..dists import draw
        return self.mean_response(theta, design) + draw(self._noise(), rng)

    def simulate_batch(self, cols, design, rng):
        from ..dists import draw_block
        mu = self._mu_cols(cols, design)
        return mu + draw_block(self._noise(), rng, mu.size).reshape(mu.shape)

    def log_likelihood(self, theta, design, value):
        mu = self.mean_response(theta, design)
        return log_prob(normal(mu, self.params["noise_sigma"]), value)

    def _mu_cols(self, cols, design):
        px, py = design["x"], design["y"]
        a = self.params["alpha"]
        m = self.params["max_signal"]
        total = np.asarray(self.params["base_signal"], dtype=np.float64)
        for k in range(int(self.params["num_sources"])):
            d2 = (cols[f"source_{k}_x"] - px) ** 2 + (cols[f"source_{k}_y"] - py) ** 2
            total = total + a / (m + d2)
        return total

    def mean_response_cols(self, cols, design):
        return self._mu_cols(cols, design)

    def loglik_bcast(self, cols, design, ys):
        mu = self._mu_cols(cols, design)
        s = self.params["noise_sigma"]
        z = (np.asarray(ys, dtype=np.float64) - mu) / s
        return -0.5 * z * z - math.log(s) - 0.5 * math.log(2.0 * math.pi)

    def goals(self):
        return [
            GoalSpec("signal", "squared_error", "design",
                     "predict the mean signal value at a measurement point"),
            GoalSpec("source_location", "vector_mse", "latent",
                     "predict the coordinates of every hidden source"),
        ]

    def sample_goal_query(self, goal, theta, rng):
        if goal.goal_id == "source_location":
            truth = tuple(v for pair in self._sources(theta) for v in pair)
            return Query(payload={"target": "source_locations",
                                  "arity": len(truth)}, truth=truth)
        d = self.random_design(rng)
        return Query(payload=d, truth=self.mean_response(theta, d))

    def describe(self, prior_framing: bool) -> str:
        k = int(self.params["num_sources"])
        lo, hi = self.params["grid_low"], self.params["grid_high"]
        if prior_framing:
            return (
                f"You are mapping a field produced by {k} hidden signal sources placed in the square "
                f"[{lo:g}, {hi:g}] x [{lo:g}, {hi:g}]. Each source emits a signal whose strength decays with the "
                "square of the distance, and the signals superimpose. A measurement at a chosen point returns "
                "the total signal plus Gaussian noise."
            )
        return (
            f"You interact with a black-box function over two inputs, each within [{lo:g}, {hi:g}]. "
            "Submitting a pair of numbers returns one noisy real value. Repeated measurements at the "
            "same point differ only by noise."
        )
