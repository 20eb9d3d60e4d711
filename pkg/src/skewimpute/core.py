"""Normal special functions, truncation geometry and seeded sampling.

Every random operation takes a ``numpy.random.Generator``.  Reproducible,
schedule-independent streams come from :func:`random_stream`, which keys a
counter-based Philox generator by ``(seed, *stream_id)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import UnreachableBound

SQRT_2PI = math.sqrt(2.0 * math.pi)
_LOG_TINY_MASS = math.log(1e-300)


def random_stream(seed: int, *stream_id: int) -> np.random.Generator:
    """Independent generator for ``(seed, stream_id)``.

    The same key always yields the same draw sequence; distinct keys yield
    statistically independent sequences (SeedSequence spawn semantics).
    """
    key = tuple(int(k) for k in stream_id)
    if any(k < 0 for k in key):
        raise ValueError(f"stream ids must be non-negative, got {key}")
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def _require_finite(z, name="z"):
    if not math.isfinite(z):
        raise ValueError(f"{name} must be finite, got {z!r}")


def std_normal_pdf(z: float) -> float:
    z = float(z)
    _require_finite(z)
    return math.exp(-0.5 * z * z) / SQRT_2PI


def std_normal_cdf(z: float) -> float:
    z = float(z)
    if math.isnan(z):
        raise ValueError("z must not be NaN")
    return float(special.ndtr(z))


def std_normal_quantile(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p!r}")
    return float(special.ndtri(p))


def mills_ratio(z):
    """phi(z) / (1 - Phi(z)), stable for large positive z via erfcx."""
    z = np.asarray(z, dtype=float)
    out = np.sqrt(2.0 / np.pi) / special.erfcx(z / np.sqrt(2.0))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TruncationGeometry:
    z_c: float
    phi: float
    Phi: float
    pi_c: float
    lambda_c: float
    delta_c: float


def truncation_geometry(mu_pre: float, sigma_pre: float, c: float) -> TruncationGeometry:
    """Standardized bound and the derived tail quantities for N(mu_pre, sigma_pre^2)."""
    if not sigma_pre > 0:
        raise ValueError(f"sigma_pre must be positive, got {sigma_pre!r}")
    if c == -math.inf:
        return TruncationGeometry(-math.inf, 0.0, 0.0, 0.0, 0.0, 0.0)
    z = (c - mu_pre) / sigma_pre
    _require_finite(z, "standardized bound")
    phi = std_normal_pdf(z)
    Phi = std_normal_cdf(z)
    lam = mills_ratio(z)
    return TruncationGeometry(
        z_c=z, phi=phi, Phi=Phi, pi_c=Phi, lambda_c=lam, delta_c=lam * (lam - z)
    )


def sample_chi_square(nu: float, rng: np.random.Generator, size=None):
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu!r}")
    return rng.chisquare(nu, size=size)


def sample_truncated_normal(mu, sigma, lower, rng: np.random.Generator, size=None):
    """Draw N(mu, sigma^2) conditioned on ``x >= lower`` by inverse CDF.

    Works in log space (``log_ndtr`` / ``ndtri_exp``) so bounds many standard
    deviations above ``mu`` remain exact.  ``mu``, ``sigma`` and ``lower``
    broadcast against each other and ``size``.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    lower = np.asarray(lower, dtype=float)
    if size is None:
        size = np.broadcast_shapes(mu.shape, sigma.shape, lower.shape)
    z = (lower - mu) / sigma
    # upper-tail mass above the bound, log scale
    log_mass = special.log_ndtr(-z)
    if np.any(log_mass < _LOG_TINY_MASS):
        raise UnreachableBound("tail mass above the lower bound is below 1e-300")
    u = 1.0 - rng.random(size)  # (0, 1]
    t = -special.ndtri_exp(np.log(u) + log_mass)
    x = mu + sigma * t
    # guard the last ulp
    x = np.maximum(x, lower)
    return x if np.ndim(x) else float(x)
