"""Moments of normals bounded below, and their moment-matching inverses.

Forward direction: given the pre-bound normal N(mu_pre, sigma_pre^2) and a
lower bound c, compute the mean and variance after truncation (redraw below
c) or censoring (round up to c).

Inverse direction: find the pre-bound normal whose bounded version has a
target mean and variance.  Both moments scale with sigma_pre once the
standardized bound Z_c is fixed, so the scale-free ratio
``(mean - c)^2 / variance`` depends on Z_c alone.  We bisect on Z_c and then
back-solve sigma_pre and mu_pre.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .core import mills_ratio, truncation_geometry
from .errors import InfeasibleTarget, NearSingular

Z_BRACKET = (-12.0, 12.0)
NEAR_SINGULAR_Z = 10.0
BISECT_TOL = 1e-12


@dataclass(frozen=True)
class MomentPair:
    mean: float
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance!r}")


@dataclass(frozen=True)
class BoundSpec:
    c: float
    kind: str  # "censor" | "truncate"
    pre_mean: float
    pre_sd: float

    def __post_init__(self):
        if self.kind not in ("censor", "truncate"):
            raise ValueError(f"kind must be 'censor' or 'truncate', got {self.kind!r}")
        if not self.pre_sd > 0:
            raise ValueError(f"pre_sd must be positive, got {self.pre_sd!r}")


def truncated_moments(spec: BoundSpec) -> MomentPair:
    g = truncation_geometry(spec.pre_mean, spec.pre_sd, spec.c)
    mean = spec.pre_mean + g.lambda_c * spec.pre_sd
    var = (1.0 - g.delta_c) * spec.pre_sd ** 2
    return MomentPair(mean, var)


def censored_moments(spec: BoundSpec) -> MomentPair:
    g = truncation_geometry(spec.pre_mean, spec.pre_sd, spec.c)
    if g.pi_c == 0.0:
        return MomentPair(spec.pre_mean, spec.pre_sd ** 2)
    trunc = truncated_moments(BoundSpec(spec.c, "truncate", spec.pre_mean, spec.pre_sd))
    pi = g.pi_c
    mean = pi * spec.c + (1.0 - pi) * trunc.mean
    var = (1.0 - pi) * (trunc.variance + (g.lambda_c - g.z_c) ** 2 * pi * spec.pre_sd ** 2)
    return MomentPair(mean, var)


def bounded_moments(spec: BoundSpec) -> MomentPair:
    return censored_moments(spec) if spec.kind == "censor" else truncated_moments(spec)


# Standardized pieces.  With sigma_pre = 1 and mu_pre = -z (so the bound sits
# at 0): truncated mean-above-bound is (lam - z), censored is Q (lam - z),
# where Q = 1 - Phi(z).


def _truncated_ratio(z):
    lam = mills_ratio(z)
    gap = lam - z
    return gap * gap / (1.0 - lam * gap)


def _censored_ratio(z):
    lam = mills_ratio(z)
    gap = lam - z
    q = special.ndtr(-z)
    pi = special.ndtr(z)
    return q * gap * gap / ((1.0 - lam * gap) + pi * gap * gap)


_RATIO = {"truncate": _truncated_ratio, "censor": _censored_ratio}


def _mean_gap(kind, z):
    gap = mills_ratio(z) - z
    return gap if kind == "truncate" else special.ndtr(-z) * gap


def _match(kind: str, target: MomentPair, c: float) -> BoundSpec:
    if not target.mean > c:
        raise InfeasibleTarget(f"target mean {target.mean} must exceed the bound {c}")
    ratio_fn = _RATIO[kind]
    r = (target.mean - c) ** 2 / target.variance
    lo, hi = Z_BRACKET
    r_lo, r_hi = ratio_fn(lo), ratio_fn(hi)
    if r >= r_lo:
        # bound lies more than 12 sd below the mean: its effect is ~1e-33
        return BoundSpec(c, kind, target.mean, math.sqrt(target.variance))
    if r <= r_hi:
        raise InfeasibleTarget(
            f"no standardized bound in [{lo}, {hi}] reaches ratio {r:.6g} "
            f"(minimum attainable {r_hi:.6g})"
        )
    # ratio is decreasing in z
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if ratio_fn(mid) > r:
            lo = mid
        else:
            hi = mid
    z = 0.5 * (lo + hi)
    if abs(z) > NEAR_SINGULAR_Z:
        raise NearSingular(
            f"matching root at Z_c={z:.4f}; mu_pre/sigma_pre is effectively -infinity",
            z_c=z,
        )
    sigma = (target.mean - c) / _mean_gap(kind, z)
    return BoundSpec(c, kind, float(c - z * sigma), float(sigma))


def match_censored(target: MomentPair, c: float) -> BoundSpec:
    """Pre-censoring normal whose censored-at-``c`` moments equal ``target``."""
    return _match("censor", target, c)


def match_truncated(target: MomentPair, c: float) -> BoundSpec:
    """Pre-truncation normal whose truncated-at-``c`` moments equal ``target``.

    Targets close to an exponential shape (mean - c ~ sd) have no finite
    solution; the root runs off to Z_c -> +infinity and this raises
    :class:`InfeasibleTarget` or :class:`NearSingular`.
    """
    return _match("truncate", target, c)


def ratio_curve(kind: str, z: np.ndarray) -> np.ndarray:
    """The scale-free ratio as a function of Z_c, for diagnostics."""
    return np.asarray(_RATIO[kind](np.asarray(z, dtype=float)))
