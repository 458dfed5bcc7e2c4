"""Predator-prey dynamics under the Lotka-Volterra equations.

    d prey/dt     = alpha * prey - beta * prey * predator
    d predator/dt = delta * prey * predator - gamma * predator

Observations are the fixed-step RK4 solution at the requested time, clamped
at zero and rounded to the nearest integer. There is no observation noise,
so the likelihood is an indicator on the rounded solution.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Mapping

import numpy as np

from ..dists import uniform
from ..rng import RngState
from .base import Design, Environment, GoalSpec, Query, design_float, register

STATE_LIMIT = 1e9


class IntegrationOverflowError(RuntimeError):
    """The ODE state exceeded STATE_LIMIT (blow-up parameters)."""


def _deriv(prey: float, pred: float, a: float, b: float, g: float, d: float):
    return (a * prey - b * prey * pred, d * prey * pred - g * pred)


def _rk4_step(prey: float, pred: float, h: float, a: float, b: float, g: float, d: float):
    k1 = _deriv(prey, pred, a, b, g, d)
    k2 = _deriv(prey + 0.5 * h * k1[0], pred + 0.5 * h * k1[1], a, b, g, d)
    k3 = _deriv(prey + 0.5 * h * k2[0], pred + 0.5 * h * k2[1], a, b, g, d)
    k4 = _deriv(prey + h * k3[0], pred + h * k3[1], a, b, g, d)
    return (prey + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            pred + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))


@lru_cache(maxsize=4096)
def _solve_raw(params: tuple, init: tuple, t: float, h: float) -> tuple:
    """Unrounded RK4 state at time ``t``; full steps of ``h`` plus one remainder."""
    a, b, g, d = params
    prey, pred = float(init[0]), float(init[1])
    if t < 0:
        raise ValueError("t must be >= 0")
    n_full = int(math.floor(t / h + 1e-12))
    rem = t - n_full * h
    for _ in range(n_full):
        prey, pred = _rk4_step(prey, pred, h, a, b, g, d)
        if abs(prey) > STATE_LIMIT or abs(pred) > STATE_LIMIT:
            raise IntegrationOverflowError(
                f"population exceeded {STATE_LIMIT:g} during integration")
    if rem > 1e-12:
        prey, pred = _rk4_step(prey, pred, rem, a, b, g, d)
    if abs(prey) > STATE_LIMIT or abs(pred) > STATE_LIMIT:
        raise IntegrationOverflowError(
            f"population exceeded {STATE_LIMIT:g} during integration")
    return (prey, pred)


def lv_integrate(params: tuple, init: tuple, t: float, h: float = 0.01) -> tuple[int, int]:
    """Rounded nonnegative populations at time ``t``.

    ``params`` = (alpha, beta, gamma, delta), ``init`` = (prey0, predator0).
    """
    prey, pred = _solve_raw(tuple(float(p) for p in params),
                            (float(init[0]), float(init[1])), float(t), float(h))
    return (int(math.floor(max(prey, 0.0) + 0.5)),
            int(math.floor(max(pred, 0.0) + 0.5)))


def lv_integrate_raw(params: tuple, init: tuple, t: float, h: float = 0.01) -> tuple[float, float]:
    """Pre-rounding solution, for step-size fidelity checks."""
    return _solve_raw(tuple(float(p) for p in params),
                      (float(init[0]), float(init[1])), float(t), float(h))


def lv_integrate_batch(cols: Mapping[str, np.ndarray], times: np.ndarray,
                       h: float = 0.01) -> np.ndarray:
    """Vectorized RK4 over per-row parameters and per-row times.

    Returns an array of shape (n, 2) with the unrounded state at each row's
    own time. All rows advance together with step ``h``; each finishes with
    one remainder step.
    """
    a = np.asarray(cols["alpha"], dtype=np.float64).ravel()
    b = np.asarray(cols["beta"], dtype=np.float64).ravel()
    g = np.asarray(cols["gamma"], dtype=np.float64).ravel()
    d = np.asarray(cols["delta"], dtype=np.float64).ravel()
    prey = np.asarray(cols["prey0"], dtype=np.float64).ravel().copy()
    pred = np.asarray(cols["pred0"], dtype=np.float64).ravel().copy()
    t = np.asarray(times, dtype=np.float64).ravel()
    n = t.size
    a, b, g, d = (np.broadcast_to(x, (n,)).copy() for x in (a, b, g, d))
    prey = np.broadcast_to(prey, (n,)).copy()
    pred = np.broadcast_to(pred, (n,)).copy()

    n_full = np.floor(t / h + 1e-12).astype(np.int64)
    rem = t - n_full * h

    def step(py, pl, hh, aa, bb, gg, dd):
        k1p = aa * py - bb * py * pl
        k1q = dd * py * pl - gg * pl
        py2, pl2 = py + 0.5 * hh * k1p, pl + 0.5 * hh * k1q
        k2p = aa * py2 - bb * py2 * pl2
        k2q = dd * py2 * pl2 - gg * pl2
        py3, pl3 = py + 0.5 * hh * k2p, pl + 0.5 * hh * k2q
        k3p = aa * py3 - bb * py3 * pl3
        k3q = dd * py3 * pl3 - gg * pl3
        py4, pl4 = py + hh * k3p, pl + hh * k3q
        k4p = aa * py4 - bb * py4 * pl4
        k4q = dd * py4 * pl4 - gg * pl4
        return (py + hh / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p),
                pl + hh / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q))

    max_steps = int(n_full.max()) if n else 0
    active = np.arange(n)
    for k in range(max_steps):
        active = active[n_full[active] > k]
        if active.size == 0:
            break
        npy, npl = step(prey[active], pred[active], h, a[active], b[active],
                        g[active], d[active])
        prey[active], pred[active] = npy, npl
    has_rem = rem > 1e-12
    if has_rem.any():
        idx = np.nonzero(has_rem)[0]
        npy, npl = step(prey[idx], pred[idx], rem[idx], a[idx], b[idx], g[idx], d[idx])
        prey[idx], pred[idx] = npy, npl
    if np.any(np.abs(prey) > STATE_LIMIT) or np.any(np.abs(pred) > STATE_LIMIT):
        raise IntegrationOverflowError(
            f"population exceeded {STATE_LIMIT:g} during integration")
    return np.stack([prey, pred], axis=-1)


@register
class PredatorPreyEnv(Environment):
    env_id = "predator_prey"
    integer_latents = frozenset({"prey0", "pred0"})

    @classmethod
    def default_params(cls):
        return {
            "t_max": 50.0,
            "step": 0.01,
            "alpha_low": 0.5, "alpha_high": 1.5,
            "beta_low": 0.05, "beta_high": 0.15,
            "gamma_low": 0.5, "gamma_high": 1.5,
            "delta_low": 0.05, "delta_high": 0.15,
            "prey0_low": 20, "prey0_high": 60,
            "pred0_low": 5, "pred0_high": 20,
        }

    def prior_specs(self):
        p = self.params
        # Integer inits: draw uniform on [low, high + 1) and floor.
        return {
            "alpha": uniform(p["alpha_low"], p["alpha_high"]),
            "beta": uniform(p["beta_low"], p["beta_high"]),
            "gamma": uniform(p["gamma_low"], p["gamma_high"]),
            "delta": uniform(p["delta_low"], p["delta_high"]),
            "prey0": uniform(float(p["prey0_low"]), float(p["prey0_high"]) + 1.0),
            "pred0": uniform(float(p["pred0_low"]), float(p["pred0_high"]) + 1.0),
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

    def _kernel(self, theta, design) -> tuple[int, int]:
        return lv_integrate(
            (theta["alpha"], theta["beta"], theta["gamma"], theta["delta"]),
            (theta["prey0"], theta["pred0"]), design["t"], self.params["step"])

    def mean_response(self, theta, design):
        return self._kernel(theta, design)

    def simulate(self, theta, design, rng):
        # Deterministic given theta: the likelihood is a point mass.
        return self._kernel(theta, design)

    def mean_response_cols(self, cols, design):
        raw = lv_integrate_batch(cols, np.full(len(next(iter(cols.values()))), design["t"]),
                                 self.params["step"])
        return np.floor(np.maximum(raw, 0.0) + 0.5)

    def simulate_batch(self, cols, design, rng):
        return self.mean_response_cols(cols, design)

    def log_likelihood(self, theta, design, value):
        got = self._kernel(theta, design)
        v = (int(value[0]), int(value[1]))
        return 0.0 if got == v else -math.inf

    def loglik_bcast(self, cols, design, ys):
        shape = np.broadcast_shapes(*(np.asarray(v).shape for v in cols.values()))
        flat = {k: np.broadcast_to(np.asarray(v, dtype=np.float64), shape).ravel()
                for k, v in cols.items()}
        raw = lv_integrate_batch(flat, np.full(flat["alpha"].size, design["t"]),
                                 self.params["step"])
        rounded = np.floor(np.maximum(raw, 0.0) + 0.5).reshape(shape + (2,))
        y = np.asarray(ys, dtype=np.float64)
        match = np.all(rounded == y, axis=-1)
        return np.where(match, 0.0, -np.inf)

    def goal_target_sample_block(self, goal, n, rng):
        # Same draw order as the scalar path, but one vectorized integration.
        cols = {k: np.empty(n) for k in ("alpha", "beta", "gamma", "delta", "prey0", "pred0")}
        times = np.empty(n)
        for i in range(n):
            sub = rng.substream("sample", i)
            theta = self.sample_theta(sub)
            for k in cols:
                cols[k][i] = theta[k]
            times[i] = self.random_design(sub)["t"]
        raw = lv_integrate_batch(cols, times, self.params["step"])
        counts = np.floor(np.maximum(raw, 0.0) + 0.5)
        return [(float(a), float(b)) for a, b in counts]

    def observation_text(self, theta, design, value):
        return f"result: [{int(value[0])}, {int(value[1])}]", ()

    def goals(self):
        return [GoalSpec("population", "vector_mse", "design",
                         "predict prey and predator populations at a chosen time")]

    def sample_goal_query(self, goal, theta, rng):
        d = self.random_design(rng)
        prey, pred = self._kernel(theta, d)
        return Query(payload=d, truth=(float(prey), float(pred)))

    def describe(self, prior_framing: bool) -> str:
        tmax = self.params["t_max"]
        if prior_framing:
            return (
                "You are studying predator and prey populations that interact over time: prey reproduce "
                "and are eaten by predators; predators grow by eating prey and die off otherwise. "
                f"Choosing a time in [0, {tmax:g}] returns the pair of population counts at that time."
            )
        return (
            f"You are probing a black-box system over one input in [0, {tmax:g}]. Each query returns a "
            "pair of nonnegative integers. The same input always returns the same pair."
        )
