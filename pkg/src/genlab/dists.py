"""Elementary one-dimensional distributions with deterministic sampling.

Sampling is inverse-CDF throughout, so every draw consumes exactly one
uniform from the owning stream and a seed plan replays draw-for-draw.
Discrete quantiles walk the CDF; Poisson switches to a rounded-normal
quantile above rate 500 (mean and variance exact, skew error O(rate^-1/2)).
All of this is documented contract: a port in another language that follows
the same rules reproduces transcripts bit-for-bit.

``log_prob`` returns natural-log density/mass and ``-inf`` outside the
support. The standard-normal CDF is erf-based with absolute error below
1e-7 (in practice near machine precision); its inverse is a rational
approximation polished with one Halley step against the erf-based CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as sp

from .rng import RngState

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_POISSON_SCAN_MAX_RATE = 500.0

KINDS = ("normal", "truncated_normal", "half_normal", "uniform",
         "bernoulli", "binomial", "poisson")


class InvalidParams(ValueError):
    """Distribution parameters violate their invariants."""


@dataclass(frozen=True)
class DistributionSpec:
    """Tagged description of a 1-D distribution.

    Only the fields relevant to ``kind`` are meaningful; use the module
    constructors (``normal``, ``uniform``, ...) rather than building one
    by hand.
    """

    kind: str
    mean: float = 0.0
    sigma: float = 1.0
    low: float = 0.0
    high: float = 1.0
    p: float = 0.5
    n: int = 1
    rate: float = 1.0

    def to_jsonable(self) -> dict:
        out = {"kind": self.kind}
        fields = {
            "normal": ("mean", "sigma"),
            "truncated_normal": ("mean", "sigma", "low", "high"),
            "half_normal": ("sigma",),
            "uniform": ("low", "high"),
            "bernoulli": ("p",),
            "binomial": ("n", "p"),
            "poisson": ("rate",),
        }[self.kind]
        for f in fields:
            v = getattr(self, f)
            out[f] = v if f == "n" else float(v)
        return out

    @staticmethod
    def from_jsonable(obj: dict) -> "DistributionSpec":
        kind = obj["kind"]
        kw = {k: (int(v) if k == "n" else float(v)) for k, v in obj.items() if k != "kind"}
        return _make(kind, **kw)


def _make(kind: str, **kw) -> DistributionSpec:
    d = DistributionSpec(kind=kind, **kw)
    validate(d)
    return d


def normal(mean: float, sigma: float) -> DistributionSpec:
    return _make("normal", mean=mean, sigma=sigma)


def truncated_normal(mean: float, sigma: float, low: float, high: float) -> DistributionSpec:
    """Normal restricted to [low, high]; ``high=inf`` gives one-sided truncation."""
    return _make("truncated_normal", mean=mean, sigma=sigma, low=low, high=high)


def half_normal(scale: float) -> DistributionSpec:
    """|N(0, scale)|, i.e. a normal truncated at zero."""
    return _make("half_normal", sigma=scale)


def uniform(low: float, high: float) -> DistributionSpec:
    return _make("uniform", low=low, high=high)


def bernoulli(p: float) -> DistributionSpec:
    return _make("bernoulli", p=p)


def binomial(n: int, p: float) -> DistributionSpec:
    return _make("binomial", n=n, p=p)


def poisson(rate: float) -> DistributionSpec:
    return _make("poisson", rate=rate)


def validate(dist: DistributionSpec) -> None:
    k = dist.kind
    if k not in KINDS:
        raise InvalidParams(f"unknown distribution kind {k!r}")
    if k in ("normal", "truncated_normal", "half_normal") and not dist.sigma > 0:
        raise InvalidParams(f"{k}: sigma must be > 0, got {dist.sigma}")
    if k == "truncated_normal":
        if not dist.low < dist.high:
            raise InvalidParams(f"truncated_normal: low must be < high, got [{dist.low}, {dist.high}]")
        if math.isinf(dist.low) and math.isinf(dist.high):
            return
    if k == "uniform" and not dist.low < dist.high:
        raise InvalidParams(f"uniform: low must be < high, got [{dist.low}, {dist.high}]")
    if k in ("bernoulli", "binomial") and not 0.0 <= dist.p <= 1.0:
        raise InvalidParams(f"{k}: p must be in [0, 1], got {dist.p}")
    if k == "binomial" and (dist.n < 0 or dist.n != int(dist.n)):
        raise InvalidParams(f"binomial: n must be a nonnegative integer, got {dist.n}")
    if k == "poisson" and not dist.rate > 0:
        raise InvalidParams(f"poisson: rate must be > 0, got {dist.rate}")


# --------------------------------------------------------------------------
# standard-normal special functions

def std_normal_cdf(x: float) -> float:
    """Phi(x) via erf; absolute error well below 1e-7."""
    return 0.5 * (1.0 + math.erf(x / _SQRT2))


def std_normal_sf(x: float) -> float:
    """1 - Phi(x), stable in the upper tail."""
    return 0.5 * math.erfc(x / _SQRT2)


def _phi_interval(a: float, b: float) -> float:
    """P(a < Z <= b) for a standard normal, stable for one-sided tails."""
    if a > 0.0:
        return 0.5 * (math.erfc(a / _SQRT2) - (0.0 if math.isinf(b) else math.erfc(b / _SQRT2)))
    if b < 0.0:
        return 0.5 * (math.erfc(-b / _SQRT2) - (0.0 if math.isinf(a) else math.erfc(-a / _SQRT2)))
    fa = 0.0 if math.isinf(a) else std_normal_cdf(a)
    fb = 1.0 if math.isinf(b) else std_normal_cdf(b)
    return fb - fa


# Acklam's rational approximation for the inverse normal CDF.
_ACK_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
          1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_ACK_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
          6.680131188771972e+01, -1.328068155288572e+01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
          -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
          3.754408661907416e+00)
_ACK_PLOW = 0.02425


def _acklam(p: float) -> float:
    a, b, c, d = _ACK_A, _ACK_B, _ACK_C, _ACK_D
    if p < _ACK_PLOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if p > 1.0 - _ACK_PLOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)


def std_normal_inv_cdf(p: float) -> float:
    """Inverse of ``std_normal_cdf``; Acklam seed plus one Halley step."""
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    x = _acklam(p)
    # Halley refinement against the erf-based CDF brings the error to ~1 ulp.
    e = std_normal_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def std_normal_cdf_arr(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + sp.erf(np.asarray(x, dtype=np.float64) / _SQRT2))


def std_normal_inv_cdf_arr(p: np.ndarray) -> np.ndarray:
    """Vectorized mirror of ``std_normal_inv_cdf`` (same formulas)."""
    p = np.asarray(p, dtype=np.float64)
    a, b, c, d = _ACK_A, _ACK_B, _ACK_C, _ACK_D
    x = np.empty_like(p)

    lo = p < _ACK_PLOW
    hi = p > 1.0 - _ACK_PLOW
    mid = ~(lo | hi)

    if np.any(lo):
        q = np.sqrt(-2.0 * np.log(p[lo]))
        x[lo] = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
                ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if np.any(hi):
        q = np.sqrt(-2.0 * np.log(1.0 - p[hi]))
        x[hi] = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
                ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        x[mid] = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
                 (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)

    e = std_normal_cdf_arr(x) - p
    u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


# --------------------------------------------------------------------------
# quantiles (scalar)

def quantile(dist: DistributionSpec, u: float) -> float | int:
    """Value of the inverse CDF at ``u`` in (0, 1). This *is* the sampler."""
    k = dist.kind
    if k == "normal":
        return dist.mean + dist.sigma * std_normal_inv_cdf(u)
    if k == "half_normal":
        return dist.sigma * std_normal_inv_cdf(0.5 * (1.0 + u))
    if k == "uniform":
        return dist.low + (dist.high - dist.low) * u
    if k == "truncated_normal":
        a = -math.inf if math.isinf(dist.low) else (dist.low - dist.mean) / dist.sigma
        b = math.inf if math.isinf(dist.high) else (dist.high - dist.mean) / dist.sigma
        fa = 0.0 if math.isinf(a) else std_normal_cdf(a)
        fb = 1.0 if math.isinf(b) else std_normal_cdf(b)
        x = dist.mean + dist.sigma * std_normal_inv_cdf(fa + u * (fb - fa))
        return min(max(x, dist.low), dist.high)
    if k == "bernoulli":
        return 1 if u > 1.0 - dist.p else 0
    if k == "binomial":
        return _binomial_quantile(dist.n, dist.p, u)
    if k == "poisson":
        return _poisson_quantile(dist.rate, u)
    raise InvalidParams(f"unknown distribution kind {k!r}")


def _binomial_quantile(n: int, p: float, u: float) -> int:
    if p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    if p > 0.5:
        # Reflect so the CDF walk starts from the heavy side of the pmf.
        return n - _binomial_quantile(n, 1.0 - p, 1.0 - u)
    q = 1.0 - p
    pmf = q ** n
    cdf = pmf
    k = 0
    while u > cdf and k < n:
        k += 1
        pmf *= (n - k + 1) / k * (p / q)
        cdf += pmf
    return k


def _poisson_quantile(rate: float, u: float) -> int:
    if rate <= _POISSON_SCAN_MAX_RATE:
        pmf = math.exp(-rate)
        cdf = pmf
        k = 0
        kmax = int(rate + 60.0 * math.sqrt(rate) + 60.0)
        while u > cdf and k < kmax:
            k += 1
            pmf *= rate / k
            cdf += pmf
        return k
    # Rounded-normal quantile above the scan threshold.
    x = rate + math.sqrt(rate) * std_normal_inv_cdf(u)
    return max(0, int(math.floor(x + 0.5)))


# --------------------------------------------------------------------------
# sampling

def draw(dist: DistributionSpec, rng: RngState) -> float | int:
    """One sample; consumes exactly one uniform from ``rng``."""
    validate(dist)
    return quantile(dist, rng.uniform01())


def draw_block(dist: DistributionSpec, rng: RngState, size: int) -> np.ndarray:
    """``size`` samples as an array; consumes ``size`` uniforms.

    Estimator-side path: same inverse-CDF construction as ``draw`` but with
    scipy's ndtri for speed, so block draws agree with scalar draws to
    floating precision rather than bit-for-bit. Transcript-bearing episode
    draws always go through the scalar path.
    """
    validate(dist)
    u = rng.uniform01_block(size)
    k = dist.kind
    if k == "normal":
        return dist.mean + dist.sigma * sp.ndtri(u)
    if k == "half_normal":
        return dist.sigma * sp.ndtri(0.5 * (1.0 + u))
    if k == "uniform":
        return dist.low + (dist.high - dist.low) * u
    if k == "truncated_normal":
        a = -math.inf if math.isinf(dist.low) else (dist.low - dist.mean) / dist.sigma
        b = math.inf if math.isinf(dist.high) else (dist.high - dist.mean) / dist.sigma
        fa = 0.0 if math.isinf(a) else std_normal_cdf(a)
        fb = 1.0 if math.isinf(b) else std_normal_cdf(b)
        x = dist.mean + dist.sigma * sp.ndtri(fa + u * (fb - fa))
        return np.clip(x, dist.low, dist.high)
    if k == "bernoulli":
        return (u > 1.0 - dist.p).astype(np.int64)
    if k == "binomial":
        return _binomial_quantile_arr(dist.n, dist.p, u)
    if k == "poisson":
        return _poisson_quantile_arr(dist.rate, u)
    raise InvalidParams(f"unknown distribution kind {k!r}")


def _binomial_quantile_arr(n: int, p: float, u: np.ndarray) -> np.ndarray:
    if p <= 0.0:
        return np.zeros(u.shape, dtype=np.int64)
    if p >= 1.0:
        return np.full(u.shape, n, dtype=np.int64)
    if p > 0.5:
        return n - _binomial_quantile_arr(n, 1.0 - p, 1.0 - u)
    q = 1.0 - p
    pmf = np.full(u.shape, q ** n)
    cdf = pmf.copy()
    out = np.zeros(u.shape, dtype=np.int64)
    for k in range(1, n + 1):
        todo = u > cdf
        if not todo.any():
            break
        pmf = pmf * ((n - k + 1) / k * (p / q))
        cdf = cdf + pmf
        out[todo] = k
    return out


def _poisson_quantile_arr(rate: float, u: np.ndarray) -> np.ndarray:
    if rate > _POISSON_SCAN_MAX_RATE:
        x = rate + math.sqrt(rate) * sp.ndtri(u)
        return np.maximum(0, np.floor(x + 0.5)).astype(np.int64)
    kmax = int(rate + 60.0 * math.sqrt(rate) + 60.0)
    pmf = np.full(u.shape, math.exp(-rate))
    cdf = pmf.copy()
    out = np.zeros(u.shape, dtype=np.int64)
    for k in range(1, kmax + 1):
        todo = u > cdf
        if not todo.any():
            break
        pmf = pmf * (rate / k)
        cdf = cdf + pmf
        out[todo] = k
    return out


# --------------------------------------------------------------------------
# log densities / masses

def log_prob(dist: DistributionSpec, x) -> float:
    """Natural-log density/mass at ``x``; ``-inf`` outside the support."""
    validate(dist)
    k = dist.kind
    if k == "normal":
        z = (x - dist.mean) / dist.sigma
        return -0.5 * z * z - math.log(dist.sigma) - _LOG_SQRT_2PI
    if k == "half_normal":
        if x < 0.0:
            return -math.inf
        z = x / dist.sigma
        return 0.5 * math.log(2.0 / math.pi) - math.log(dist.sigma) - 0.5 * z * z
    if k == "uniform":
        if dist.low <= x <= dist.high:
            return -math.log(dist.high - dist.low)
        return -math.inf
    if k == "truncated_normal":
        if x < dist.low or x > dist.high:
            return -math.inf
        a = -math.inf if math.isinf(dist.low) else (dist.low - dist.mean) / dist.sigma
        b = math.inf if math.isinf(dist.high) else (dist.high - dist.mean) / dist.sigma
        z = (x - dist.mean) / dist.sigma
        norm = _phi_interval(a, b)
        return -0.5 * z * z - math.log(dist.sigma) - _LOG_SQRT_2PI - math.log(norm)
    if k == "bernoulli":
        if x == 1:
            return math.log(dist.p) if dist.p > 0.0 else -math.inf
        if x == 0:
            return math.log1p(-dist.p) if dist.p < 1.0 else -math.inf
        return -math.inf
    if k == "binomial":
        if x != int(x) or x < 0 or x > dist.n:
            return -math.inf
        m = int(x)
        if dist.p == 0.0:
            return 0.0 if m == 0 else -math.inf
        if dist.p == 1.0:
            return 0.0 if m == dist.n else -math.inf
        return (math.lgamma(dist.n + 1) - math.lgamma(m + 1) - math.lgamma(dist.n - m + 1)
                + m * math.log(dist.p) + (dist.n - m) * math.log1p(-dist.p))
    if k == "poisson":
        if x != int(x) or x < 0:
            return -math.inf
        m = int(x)
        return m * math.log(dist.rate) - dist.rate - math.lgamma(m + 1)
    raise InvalidParams(f"unknown distribution kind {k!r}")
