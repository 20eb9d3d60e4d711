"""Normal-model imputation of a skewed incomplete X, with and without modifications.

Every method is split into a *prepare* step, which fits whatever model the
method needs on the observed cases, and a *draw* step, which produces one
completed copy of X from a generator.  ``multiply_impute`` prepares once and
draws ``m`` times; the single-shot ``impute_*`` functions do both.

Diagnostics (rejection fallbacks, truncated-regression refits, unreachable
tails) are tallied into an optional ``collections.Counter`` passed as
``stats``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InsufficientData, InvalidData, MethodFailure, NonConvergence
from .regression import design_matrix, ols_fit, posterior_draw_regression, posterior_draw_univariate
from .truncreg import truncreg_fit, truncreg_impute

METHODS = (
    "linear",
    "linear_censored",
    "linear_truncated",
    "quadratic",
    "transform_x",
    "transform_all",
    "truncated_regression",
)

METHOD_LABELS = {
    "linear": "Linear regression",
    "linear_censored": "Linear regression, censored",
    "linear_truncated": "Linear regression, truncated",
    "quadratic": "Quadratic regression",
    "truncated_regression": "Truncated regression",
    "transform_x": "Transform X",
    "transform_all": "Transform all",
    "fn_univariate": "Fully normal (univariate)",
}


@dataclass
class IncompleteDataset:
    """X with a missingness mask, plus complete Y (and optionally Z).

    ``x`` keeps the values that were deleted; methods only ever read
    ``x[~missing]``.
    """

    x: np.ndarray
    missing: np.ndarray
    y: np.ndarray
    z: Optional[np.ndarray] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.missing = np.asarray(self.missing, dtype=bool)
        self.y = np.asarray(self.y, dtype=float)
        if self.z is not None:
            self.z = np.asarray(self.z, dtype=float)
        n = len(self.x)
        if self.missing.shape != (n,) or self.y.shape != (n,):
            raise ValueError("x, missing and y must have the same length")
        if self.z is not None and self.z.shape != (n,):
            raise ValueError("z must have the same length as x")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def n_obs(self) -> int:
        return int(np.count_nonzero(~self.missing))

    @property
    def n_mis(self) -> int:
        return int(np.count_nonzero(self.missing))

    @property
    def x_obs(self) -> np.ndarray:
        return self.x[~self.missing]

    def predictors(self) -> np.ndarray:
        """Complete variables as columns: (Y) or (Y, Z)."""
        cols = [self.y] if self.z is None else [self.y, self.z]
        return np.column_stack(cols)

    def complete_with(self, imputed: np.ndarray) -> np.ndarray:
        out = self.x.copy()
        out[self.missing] = imputed
        return out


@dataclass(frozen=True)
class ImputationSpec:
    method: str = "linear"
    bound_c: float = 0.0
    m: int = 5
    rejection_cap: int = 100
    rejection_fallback_c: float = -6.0
    truncreg_fallback_c: float = -1.0
    prior_df: int = 0

    def __post_init__(self):
        if self.method not in METHODS and self.method != "fn_univariate":
            raise ValueError(f"unknown method {self.method!r}")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.rejection_cap < 1:
            raise ValueError("rejection_cap must be at least 1")


@dataclass(frozen=True)
class TransformSpec:
    """Root transform ``(v - offset) ** (1 / power)`` and its inverse."""

    kind: str = "fourth_root"  # or "square_root"
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fourth_root", "square_root"):
            raise ValueError(f"unknown transform {self.kind!r}")

    @property
    def power(self) -> int:
        return 4 if self.kind == "fourth_root" else 2

    def forward(self, v) -> np.ndarray:
        shifted = np.asarray(v, dtype=float) - self.offset
        if np.any(shifted < 0):
            raise InvalidData("root transform needs values at or above the offset")
        return shifted ** (1.0 / self.power)

    def inverse(self, t) -> np.ndarray:
        # even power: negative draws on the root scale come back positive
        return np.asarray(t, dtype=float) ** self.power + self.offset

    @classmethod
    def offset_by_min(cls, v, kind: str = "fourth_root") -> "TransformSpec":
        return cls(kind, float(np.min(v)))


# --- bounding ---------------------------------------------------------------

def apply_censoring(values, c: float) -> np.ndarray:
    """Round every value below ``c`` up to ``c``."""
    return np.maximum(np.asarray(values, dtype=float), c)


def reject_below(draw: Callable[[np.ndarray], np.ndarray], values, c: float, cap: int,
                 fallback_c: float, stats: Optional[Counter] = None) -> np.ndarray:
    """Vectorized rejection: redraw entries below ``c`` until in bounds.

    ``values`` counts as the first attempt.  ``draw(idx)`` must return fresh
    draws for positions ``idx``.  Entries still below ``c`` after ``cap``
    attempts are redrawn against ``fallback_c`` (again up to ``cap``
    attempts, then censored there) and counted as fallbacks.
    """
    out = np.array(values, dtype=float, copy=True)
    for bound in (c, fallback_c):
        bad = np.flatnonzero(out < bound)
        attempts = 1 if bound == c else 0
        while bad.size and attempts < cap:
            out[bad] = draw(bad)
            attempts += 1
            bad = bad[out[bad] < bound]
        if bound == c:
            if not bad.size:
                return out
            if stats is not None:
                stats["rejection_fallbacks"] += int(bad.size)
            out[bad] = -np.inf
            lowest = bad
    left = lowest[out[lowest] < fallback_c]
    out[left] = fallback_c
    return out


def apply_truncation_rejection(imputer: Callable[[np.random.Generator], float], c: float, cap: int,
                               fallback_c: float, rng: np.random.Generator,
                               stats: Optional[Counter] = None) -> float:
    """Scalar rejection sampler around a single-value ``imputer(rng)``."""
    first = imputer(rng)

    def draw(idx):
        return np.array([imputer(rng) for _ in idx], dtype=float)

    return float(reject_below(draw, [first], c, cap, fallback_c, stats)[0])


# --- regression-based preparation ------------------------------------------

def _quadratic_predictors(ds: IncompleteDataset) -> np.ndarray:
    cols = [ds.y, ds.y ** 2]
    if ds.z is not None:
        cols.append(ds.z)
    return np.column_stack(cols)


def _check_nonnegative(x_obs):
    if np.any(x_obs < 0):
        raise InvalidData("transformation methods need nonnegative observed X")


class _LinearDraw:
    """Posterior-draw linear regression imputation on an arbitrary scale."""

    def __init__(self, pred, target, missing, prior_df=0):
        self.fit = ols_fit(pred[~missing], target[~missing])
        self.X_mis = design_matrix(pred[missing])
        self.prior_df = prior_df

    def __call__(self, rng):
        draw = posterior_draw_regression(self.fit, self.prior_df, rng)
        mean = self.X_mis @ draw.coefficients
        sd = np.sqrt(draw.residual_variance)
        return mean, sd, mean + sd * rng.standard_normal(len(mean))


def _prepare(ds: IncompleteDataset, spec: ImputationSpec, stats: Counter) -> Callable:
    method = spec.method
    if ds.n_obs < 3:
        raise InsufficientData("fewer than three observed X values")
    if method == "fn_univariate":
        return _prepare_fn(ds.x, ds.missing, spec.prior_df)

    if method in ("linear", "linear_censored", "linear_truncated"):
        lin = _LinearDraw(ds.predictors(), ds.x, ds.missing, spec.prior_df)

        def run(rng):
            mean, sd, imp = lin(rng)
            if method == "linear_censored":
                imp = apply_censoring(imp, spec.bound_c)
            elif method == "linear_truncated":
                imp = reject_below(
                    lambda idx: mean[idx] + sd * rng.standard_normal(len(idx)),
                    imp, spec.bound_c, spec.rejection_cap, spec.rejection_fallback_c, stats,
                )
            return ds.complete_with(imp)

        return run

    if method == "quadratic":
        lin = _LinearDraw(_quadratic_predictors(ds), ds.x, ds.missing, spec.prior_df)
        return lambda rng: ds.complete_with(lin(rng)[2])

    if method in ("transform_x", "transform_all"):
        _check_nonnegative(ds.x_obs)
        tx = TransformSpec("fourth_root")
        t = np.where(ds.missing, 0.0, tx.forward(np.abs(ds.x)))
        pred = ds.predictors()
        if method == "transform_all":
            pred = np.column_stack([TransformSpec.offset_by_min(col).forward(col) for col in pred.T])
        lin = _LinearDraw(pred, t, ds.missing, spec.prior_df)
        return lambda rng: ds.complete_with(tx.inverse(lin(rng)[2]))

    if method == "truncated_regression":
        return _prepare_truncreg(ds, spec, stats)

    raise ValueError(f"unknown method {method!r}")


def _prepare_truncreg(ds, spec, stats):
    pred = ds.predictors()
    obs = ~ds.missing
    try:
        fit = truncreg_fit(pred[obs], ds.x[obs], spec.bound_c)
    except NonConvergence:
        stats["truncreg_refits"] += 1
        try:
            fit = truncreg_fit(pred[obs], ds.x[obs], spec.truncreg_fallback_c)
        except NonConvergence as exc:
            raise MethodFailure("truncated regression failed at both truncation points") from exc
    rows = pred[ds.missing]
    return lambda rng: ds.complete_with(truncreg_impute(fit, rows, rng, stats))


def _prepare_fn(values, missing, prior_df):
    values = np.asarray(values, dtype=float)
    missing = np.asarray(missing, dtype=bool)
    obs = values[~missing]
    if len(obs) < 2:
        raise InsufficientData("need at least two observed values")
    mean, var, n_obs = float(obs.mean()), float(obs.var(ddof=1)), len(obs)
    k = int(np.count_nonzero(missing))

    def run(rng):
        out = values.copy()
        if k:
            draw = posterior_draw_univariate(n_obs, mean, var, prior_df, rng)
            out[missing] = draw.coefficients[0] + np.sqrt(draw.residual_variance) * rng.standard_normal(k)
        return out

    return run


# --- public single-shot API -------------------------------------------------

def impute_fn_univariate(values, missing, prior_df: int, rng: np.random.Generator) -> np.ndarray:
    """Fill missing entries with normal draws from posterior-drawn mean and variance."""
    return _prepare_fn(values, missing, prior_df)(rng)


def impute_fn_transformed(values, missing, kind: str, prior_df: int, rng: np.random.Generator) -> np.ndarray:
    """Univariate FN imputation on a root scale, then back-transformed.

    ``kind`` is ``"square_root"`` or ``"fourth_root"``; values must be
    nonnegative.
    """
    tx = TransformSpec(kind)
    values = np.asarray(values, dtype=float)
    missing = np.asarray(missing, dtype=bool)
    _check_nonnegative(values[~missing])
    t = np.where(missing, 0.0, tx.forward(np.abs(values)))
    done = impute_fn_univariate(t, missing, prior_df, rng)
    out = values.copy()
    out[missing] = tx.inverse(done[missing])
    return out


def impute(ds: IncompleteDataset, spec: ImputationSpec, rng: np.random.Generator,
           stats: Optional[Counter] = None) -> np.ndarray:
    stats = Counter() if stats is None else stats
    return _prepare(ds, spec, stats)(rng)


def impute_linear(ds, rng, stats=None):
    return impute(ds, ImputationSpec("linear"), rng, stats)


def impute_linear_censored(ds, rng, c=0.0, stats=None):
    return impute(ds, ImputationSpec("linear_censored", bound_c=c), rng, stats)


def impute_linear_truncated(ds, rng, c=0.0, stats=None, **options):
    return impute(ds, ImputationSpec("linear_truncated", bound_c=c, **options), rng, stats)


def impute_quadratic(ds, rng, stats=None):
    return impute(ds, ImputationSpec("quadratic"), rng, stats)


def impute_transform_x(ds, rng, stats=None):
    return impute(ds, ImputationSpec("transform_x"), rng, stats)


def impute_transform_all(ds, rng, stats=None):
    return impute(ds, ImputationSpec("transform_all"), rng, stats)


def impute_truncated_regression(ds, c, rng, stats=None):
    return impute(ds, ImputationSpec("truncated_regression", bound_c=c), rng, stats)


def multiply_impute(ds: IncompleteDataset, spec: ImputationSpec,
                    rng: np.random.Generator | Sequence[np.random.Generator],
                    stats: Optional[Counter] = None) -> list[np.ndarray]:
    """``spec.m`` completions of X sharing one model fit.

    ``rng`` is either one generator used sequentially or a sequence of
    ``m`` per-imputation generators.
    """
    stats = Counter() if stats is None else stats
    run = _prepare(ds, spec, stats)
    if isinstance(rng, np.random.Generator):
        return [run(rng) for _ in range(spec.m)]
    rngs = list(rng)
    if len(rngs) != spec.m:
        raise ValueError(f"expected {spec.m} generators, got {len(rngs)}")
    return [run(r) for r in rngs]
