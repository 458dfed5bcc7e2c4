"""Scoring: expected information gain and standardized prediction error.

The nested Monte Carlo EIG estimator draws N outer latents, simulates one
outcome under each, and contrasts the own-latent likelihood against an
M-sample prior average:

    (1/N) sum_n [ log p(y_n | th_n0, d) - log (1/M) sum_m p(y_n | th_nm, d) ]

``eig_oracle_small`` is the verification oracle: exact mutual information
over a weighted latent grid and a finite outcome support. Prediction errors
are standardized against the prior predictive baseline: mean over queries of
(f(pred, truth) - f(mu0, truth)) / sigma0.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dists import DistributionSpec, quantile
from .envs import Design, EnvConfig, GoalSpec, make_env
from .rng import RngState

LOG_FLOOR = -700.0
MAX_ORACLE_CELLS = 50_000_000


class SupportTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class EigEstimate:
    value: float
    n_outer: int
    m_inner: int
    std_error: float
    degenerate_count: int = 0

    @property
    def flagged(self) -> bool:
        return self.degenerate_count > 0

    def to_jsonable(self) -> dict:
        return {"value": self.value, "n_outer": self.n_outer, "m_inner": self.m_inner,
                "std_error": self.std_error, "degenerate_count": self.degenerate_count}


@dataclass(frozen=True)
class PriorPredictiveStats:
    mu0: object            # scalar or tuple, matching the goal's predictand shape
    sigma0: float
    n_samples: int

    def to_jsonable(self) -> dict:
        mu = list(self.mu0) if isinstance(self.mu0, tuple) else self.mu0
        return {"mu0": mu, "sigma0": self.sigma0, "n_samples": self.n_samples}


@dataclass
class ParticleSet:
    """Weighted prior sample standing in for a posterior over latents."""

    cols: dict[str, np.ndarray]
    log_weights: np.ndarray

    @property
    def size(self) -> int:
        return self.log_weights.size

    def normalized_weights(self) -> np.ndarray:
        lw = self.log_weights - self.log_weights.max()
        w = np.exp(lw)
        return w / w.sum()

    def ess(self) -> float:
        w = self.normalized_weights()
        return float(1.0 / np.square(w).sum())

    def resample_indices(self, n: int, rng: RngState) -> np.ndarray:
        cdf = np.cumsum(self.normalized_weights())
        cdf[-1] = 1.0
        u = rng.uniform01_block(n)
        return np.searchsorted(cdf, u, side="left")

    def posterior_mean(self, values: np.ndarray) -> np.ndarray:
        w = self.normalized_weights()
        v = np.asarray(values, dtype=np.float64)
        return np.tensordot(w, v, axes=(0, 0))


def prior_particles(config: EnvConfig, n: int, rng: RngState) -> ParticleSet:
    env = make_env(config)
    cols = env.sample_theta_block(rng, n)
    return ParticleSet(cols=cols, log_weights=np.zeros(n))


def reweight_particles(config: EnvConfig, particles: ParticleSet, design: Design,
                       value) -> ParticleSet:
    """Condition on one observation: add its log likelihood to the weights."""
    env = make_env(config)
    y = np.asarray(value, dtype=np.float64)
    ll = env.loglik_bcast(particles.cols, design, y)
    lw = particles.log_weights + np.maximum(ll, LOG_FLOOR)
    return ParticleSet(cols=particles.cols, log_weights=lw)


# --------------------------------------------------------------------------
# nested Monte Carlo estimator

def eig_nmc(config: EnvConfig, design: Design, n_outer: int, m_inner: int,
            rng: RngState, particles: ParticleSet | None = None) -> EigEstimate:
    """NMC estimate of the expected information gain of ``design``.

    With ``particles`` given, latents are drawn from the particle posterior
    instead of the prior (the sequential variant).
    """
    if n_outer < 1 or m_inner < 1:
        raise ValueError("n_outer and m_inner must be >= 1")
    env = make_env(config)
    design = env.parse_design(design)
    reason = env.validate_design(design)
    if reason is not None:
        from .envs import InvalidDesignError
        raise InvalidDesignError(reason)

    r_theta0 = rng.substream("nmc_theta0")
    r_y = rng.substream("nmc_y")
    r_inner = rng.substream("nmc_inner")

    if particles is None:
        cols0 = env.sample_theta_block(r_theta0, n_outer)
        cols_in = env.sample_theta_block(r_inner, n_outer * m_inner)
    else:
        idx0 = particles.resample_indices(n_outer, r_theta0)
        cols0 = {k: v[idx0] for k, v in particles.cols.items()}
        idx_in = particles.resample_indices(n_outer * m_inner, r_inner)
        cols_in = {k: v[idx_in] for k, v in particles.cols.items()}

    ys = env.simulate_batch(cols0, design, r_y)
    ys = np.asarray(ys, dtype=np.float64)

    ll0 = env.loglik_bcast(cols0, design, ys)

    cols_in = {k: v.reshape(n_outer, m_inner) for k, v in cols_in.items()}
    ys_b = ys[:, None] if ys.ndim == 1 else ys[:, None, :]
    ll_in = env.loglik_bcast(cols_in, design, ys_b)

    inner = logsumexp(ll_in, axis=1) - math.log(m_inner)
    degenerate = int(np.sum(inner < LOG_FLOOR))
    inner = np.maximum(inner, LOG_FLOOR)
    contrib = np.maximum(ll0, LOG_FLOOR) - inner

    value = float(np.mean(contrib))
    se = float(np.std(contrib, ddof=1) / math.sqrt(n_outer)) if n_outer > 1 else 0.0
    return EigEstimate(value=value, n_outer=n_outer, m_inner=m_inner,
                       std_error=se, degenerate_count=degenerate)


# --------------------------------------------------------------------------
# exact oracle on a grid

def eig_oracle_small(config: EnvConfig, design: Design, theta_grid: list,
                     outcome_support: list) -> float:
    """Exact I(theta; y | design) over a weighted grid and finite support.

    ``theta_grid`` is a list of (theta dict, weight); weights must sum to 1.
    """
    env = make_env(config)
    design = env.parse_design(design)
    if len(theta_grid) * len(outcome_support) > MAX_ORACLE_CELLS:
        raise SupportTooLargeError(
            f"{len(theta_grid)} grid points x {len(outcome_support)} outcomes is too large")
    weights = np.array([w for _, w in theta_grid], dtype=np.float64)
    weights = weights / weights.sum()

    probs = np.empty((len(theta_grid), len(outcome_support)))
    for i, (theta, _) in enumerate(theta_grid):
        for j, y in enumerate(outcome_support):
            probs[i, j] = math.exp(env.log_likelihood(theta, design, y))
    row_mass = probs.sum(axis=1)
    if np.any(row_mass < 1.0 - 1e-6):
        raise SupportTooLargeError(
            f"outcome support covers only {row_mass.min():.6f} of the mass; enlarge it")

    def entropy(p):
        p = np.asarray(p)
        nz = p > 0
        return float(-(p[nz] * np.log(p[nz])).sum())

    marginal = weights @ probs
    h_marginal = entropy(marginal)
    h_cond = float(sum(w * entropy(p) for w, p in zip(weights, probs)))
    return h_marginal - h_cond


def quantile_grid(dist: DistributionSpec, n: int) -> list[tuple[float, float]]:
    """Gauss-Legendre nodes mapped through the inverse CDF: (value, weight)."""
    nodes, weights = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (nodes + 1.0)          # (0, 1)
    w = 0.5 * weights                # sums to 1
    return [(quantile(dist, float(ui)), float(wi)) for ui, wi in zip(u, w)]


def prior_grid(config: EnvConfig, points_per_dim: dict[str, int]) -> list[tuple[dict, float]]:
    """Tensor-product quadrature grid over the environment's prior.

    ``points_per_dim`` maps each latent name to its 1-D node count; the
    result is the weighted cartesian product.
    """
    env = make_env(config)
    specs = env.prior_specs()
    unknown = set(points_per_dim) - set(specs)
    if unknown:
        raise KeyError(f"not latents of {config.env_id}: {sorted(unknown)}")
    grid: list[tuple[dict, float]] = [({}, 1.0)]
    for name in specs:
        n = points_per_dim.get(name)
        if n is None:
            raise KeyError(f"missing node count for latent {name!r}")
        axis = quantile_grid(specs[name], n)
        grid = [(dict(theta, **{name: v}), w * wv)
                for theta, w in grid for v, wv in axis]
    return grid


# --------------------------------------------------------------------------
# EI regret

def design_hash(design: Design) -> int:
    """Stable 63-bit hash of a design's canonical JSON (order-free)."""
    blob = json.dumps(_plain(design), sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(blob.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def ei_regret(config: EnvConfig, chosen: list, n_random: int, rng: RngState,
              n_outer: int = 1000, m_inner: int = 1000,
              particles: ParticleSet | None = None) -> float:
    """Best random-design EIG minus the mean EIG of the chosen designs.

    Every design's estimate uses a substream keyed by the design content, so
    the result is invariant to list order and a chosen design equal to the
    pool maximum has exactly its pooled estimate.
    """
    if n_random < 1:
        raise ValueError("n_random must be >= 1")
    if not chosen:
        raise ValueError("chosen must be nonempty")
    env = make_env(config)
    pool_rng = rng.substream("regret_pool")
    pool = [env.random_design(pool_rng) for _ in range(n_random)]

    def estimate(design: Design) -> EigEstimate:
        sub = rng.substream("eig_design", design_hash(design))
        return eig_nmc(config, design, n_outer, m_inner, sub, particles=particles)

    pool_estimates = [estimate(d) for d in pool]
    usable = [e.value for e in pool_estimates if not e.flagged]
    if not usable:
        usable = [e.value for e in pool_estimates]
    best_random = max(usable)
    chosen_mean = float(np.mean([estimate(d).value for d in chosen]))
    return best_random - chosen_mean


# --------------------------------------------------------------------------
# standardized prediction error

def error_value(error_fn: str, pred, truth) -> float:
    if error_fn == "squared_error":
        d = float(pred) - float(truth)
        return d * d
    if error_fn == "zero_one":
        return 0.0 if _binarize(pred) == _binarize(truth) else 1.0
    if error_fn == "vector_mse":
        p = np.asarray(pred, dtype=np.float64)
        t = np.asarray(truth, dtype=np.float64)
        if p.shape != t.shape:
            raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
        return float(np.mean((p - t) ** 2))
    raise ValueError(f"unknown error_fn {error_fn!r}")


def _binarize(x) -> int:
    return 1 if float(x) > 0.5 else 0


_STATS_CACHE: dict[tuple, PriorPredictiveStats] = {}


def prior_predictive_stats(config: EnvConfig, goal: GoalSpec, n_samples: int,
                           rng: RngState) -> PriorPredictiveStats:
    """Prior-predictive mean mu0 and error scale sigma0 for a goal.

    Samples (design, theta) pairs from the design space and prior, simulates
    outcomes, and takes mu0 as their mean; sigma0 is the standard deviation
    of the errors f(mu0, y) over the same population. Cached per
    (config, goal, stream identity).
    """
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    key = (config.digest(), goal.goal_id, n_samples, rng.key())
    hit = _STATS_CACHE.get(key)
    if hit is not None:
        return hit

    env = make_env(config)
    sub = rng.substream("prior_predictive")
    samples = env.goal_target_sample_block(goal, n_samples, sub)

    arr = np.asarray(samples, dtype=np.float64)
    mu_vec = arr.mean(axis=0)
    mu0 = tuple(float(v) for v in mu_vec) if arr.ndim > 1 else float(mu_vec)
    errors = np.array([error_value(goal.error_fn, mu0, y) for y in samples])
    sigma0 = float(errors.std())
    if sigma0 <= 0.0:
        raise ValueError(
            f"degenerate prior predictive for {config.env_id}/{goal.goal_id}: sigma0 = 0")
    stats = PriorPredictiveStats(mu0=mu0, sigma0=sigma0, n_samples=n_samples)
    _STATS_CACHE[key] = stats
    return stats


def standardized_error(preds: list, truths: list, error_fn: str,
                       stats: PriorPredictiveStats) -> float:
    """Mean over queries of (f(pred, truth) - f(mu0, truth)) / sigma0."""
    if len(preds) != len(truths) or not preds:
        raise ValueError("preds and truths must be equal-length and nonempty")
    total = 0.0
    for p, t in zip(preds, truths):
        total += (error_value(error_fn, p, t) - error_value(error_fn, stats.mu0, t)) / stats.sigma0
    return total / len(preds)
