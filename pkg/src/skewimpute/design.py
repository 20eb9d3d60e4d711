"""Complete-data generators for the two designs and the three deletion mechanisms."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from .estimands import conditional_variance_bivariate, conditional_variance_trivariate
from .methods import METHODS, IncompleteDataset

NU_LEVELS = (1, 2, 4, 8)
RHO2_LEVELS = (0.1, 0.3, 0.5, 0.7, 0.9)
PATTERNS = ("mcar", "tail", "peak")
DESIGNS = ("bivariate", "trivariate")
CONTROL = "none"  # method/pattern label of the no-deletion control
MIN_OBSERVED = 3
MAX_MASK_DRAWS = 1000


@dataclass(frozen=True)
class CompleteDataset:
    x: np.ndarray
    y: np.ndarray
    z: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CellConfig:
    nu: float
    rho2: float
    pattern: str = "mcar"
    method: str = "linear"
    n: int = 100
    replications: int = 100
    design: str = "bivariate"
    m: int = 5

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.method != CONTROL and self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.pattern != CONTROL and self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if (self.method == CONTROL) != (self.pattern == CONTROL):
            raise ValueError("the control cell uses method and pattern 'none' together")
        if not self.nu > 0:
            raise ValueError("nu must be positive")
        if not 0.0 < self.rho2 < 1.0:
            raise ValueError("rho2 must lie strictly between 0 and 1")
        if self.n < 2 * MIN_OBSERVED or self.replications < 1 or self.m < 1:
            raise ValueError("n, replications and m are too small")

    @property
    def is_control(self) -> bool:
        return self.method == CONTROL

    def stream_key(self) -> tuple[int, ...]:
        """Integer key identifying the cell's data; the method is deliberately
        absent so every method sees the same datasets."""
        patterns = (CONTROL,) + PATTERNS
        nu_key = int(round(self.nu * 1000))
        return (
            DESIGNS.index(self.design),
            nu_key,
            int(round(self.rho2 * 1000)),
            patterns.index(self.pattern),
            self.n,
        )


def gen_bivariate(nu: float, rho2: float, n: int, rng: np.random.Generator) -> CompleteDataset:
    """X ~ chi2(nu); Y = 1 + X + e with Var(e) chosen so R^2(Y|X) = rho2."""
    x = rng.chisquare(nu, n)
    sd = math.sqrt(conditional_variance_bivariate(nu, rho2))
    y = 1.0 + x + sd * rng.standard_normal(n)
    return CompleteDataset(x, y)


def gen_trivariate(nu: float, rho2: float, n: int, rng: np.random.Generator) -> CompleteDataset:
    """(X, Y) as in the bivariate design; Z = 1 + X + Y + e with R^2(Z|X,Y) = .5."""
    base = gen_bivariate(nu, rho2, n, rng)
    sd = math.sqrt(conditional_variance_trivariate(nu, rho2))
    z = 1.0 + base.x + base.y + sd * rng.standard_normal(n)
    return CompleteDataset(base.x, base.y, z)


def generate(config: CellConfig, rng: np.random.Generator) -> CompleteDataset:
    gen = gen_bivariate if config.design == "bivariate" else gen_trivariate
    return gen(config.nu, config.rho2, config.n, rng)


def ecdf(values) -> np.ndarray:
    """Within-sample ECDF rank/n; tied values share the largest rank."""
    v = np.asarray(values, dtype=float)
    return rankdata(v, method="max") / len(v)


def deletion_probabilities(data: CompleteDataset, pattern: str) -> np.ndarray:
    n = len(data.x)
    if pattern == "mcar":
        return np.full(n, 0.5)
    if pattern == "tail":
        return ecdf(data.y)
    if pattern == "peak":
        return 1.0 - ecdf(data.y)
    raise ValueError(f"unknown pattern {pattern!r}")


def _delete(data: CompleteDataset, pattern: str, rng, stats: Optional[Counter]) -> IncompleteDataset:
    prob = deletion_probabilities(data, pattern)
    for _ in range(MAX_MASK_DRAWS):
        missing = rng.random(len(prob)) < prob
        if np.count_nonzero(~missing) >= MIN_OBSERVED:
            return IncompleteDataset(data.x, missing, data.y, data.z)
        if stats is not None:
            stats["mask_resamples"] += 1
    raise RuntimeError("could not draw a mask with enough observed values")


def delete_mcar(data: CompleteDataset, rng: np.random.Generator, stats: Optional[Counter] = None) -> IncompleteDataset:
    """Delete each X with probability 1/2."""
    return _delete(data, "mcar", rng, stats)


def delete_tail(data: CompleteDataset, rng: np.random.Generator, stats: Optional[Counter] = None) -> IncompleteDataset:
    """Delete X_i with probability F(Y_i): missingness concentrated at high Y."""
    return _delete(data, "tail", rng, stats)


def delete_peak(data: CompleteDataset, rng: np.random.Generator, stats: Optional[Counter] = None) -> IncompleteDataset:
    """Delete X_i with probability 1 - F(Y_i): missingness concentrated at low Y."""
    return _delete(data, "peak", rng, stats)


DELETERS = {"mcar": delete_mcar, "tail": delete_tail, "peak": delete_peak}
