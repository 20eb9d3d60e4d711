"""Estimands computed on completed data, their true values, and MI averaging."""
from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateSample
from .regression import ols_fit

BIVARIATE_ESTIMANDS = ("x_mean", "x_sd", "x_skew", "slope", "intercept", "resid_sd", "r2")
TRIVARIATE_ESTIMANDS = ("x_mean", "x_sd", "x_skew", "slope_x", "slope_y", "intercept", "resid_sd", "r2")
TRIVARIATE_R2 = 0.5


def estimand_names(design: str) -> tuple[str, ...]:
    if design == "bivariate":
        return BIVARIATE_ESTIMANDS
    if design == "trivariate":
        return TRIVARIATE_ESTIMANDS
    raise ValueError(f"unknown design {design!r}")


def sample_skewness(values) -> float:
    """Moment-ratio skewness g1 = m3 / m2^1.5 with divisor-n central moments."""
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        raise DegenerateSample("skewness needs at least three values")
    d = v - v.mean()
    m2 = float(np.mean(d * d))
    if m2 <= 1e-300 or np.ptp(v) == 0:
        raise DegenerateSample("skewness of a constant sample is undefined")
    return float(np.mean(d ** 3)) / m2 ** 1.5


def analyze(x, y, z=None) -> dict[str, float]:
    """Estimands for one completed dataset.

    Bivariate (``z`` is None): moments of X and the OLS regression of Y on X.
    Trivariate: moments of X and the regression of Z on (X, Y).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if z is None:
        predictors, response = x, y
    else:
        predictors, response = np.column_stack([x, y]), np.asarray(z, dtype=float)
    fit = ols_fit(predictors, response)
    d = response - response.mean()
    sst = float(d @ d)
    sse = fit.residual_variance * fit.df
    out = {
        "x_mean": float(x.mean()),
        "x_sd": float(x.std(ddof=1)),
        "x_skew": sample_skewness(x),
    }
    if z is None:
        out["slope"] = float(fit.coefficients[1])
    else:
        out["slope_x"] = float(fit.coefficients[1])
        out["slope_y"] = float(fit.coefficients[2])
    out["intercept"] = float(fit.coefficients[0])
    out["resid_sd"] = math.sqrt(fit.residual_variance)
    out["r2"] = min(max(1.0 - sse / sst, 0.0), 1.0) if sst > 0 else float("nan")
    return out


def mi_combine(estimates: Sequence[Mapping[str, float]]) -> dict[str, float]:
    """Component-wise mean over imputations."""
    if not estimates:
        raise ValueError("need at least one set of estimates")
    keys = list(estimates[0])
    return {k: float(np.mean([e[k] for e in estimates])) for k in keys}


def conditional_variance_bivariate(nu: float, r2: float) -> float:
    """Residual variance of Y given X that makes R^2(Y|X) = r2, slope 1."""
    return 2.0 * nu * (1.0 - r2) / r2


def conditional_variance_trivariate(nu: float, rho2: float) -> float:
    """Residual variance of Z given (X, Y): Var(X + Y) for slopes of 1."""
    var_x = 2.0 * nu
    var_y = var_x / rho2
    return var_x + var_y + 2.0 * var_x


def true_values(design: str, nu: float, rho2: float) -> dict[str, float]:
    out = {
        "x_mean": float(nu),
        "x_sd": math.sqrt(2.0 * nu),
        "x_skew": math.sqrt(8.0 / nu),
    }
    if design == "bivariate":
        out["slope"] = 1.0
        out["intercept"] = 1.0
        out["resid_sd"] = math.sqrt(conditional_variance_bivariate(nu, rho2))
        out["r2"] = float(rho2)
    elif design == "trivariate":
        out["slope_x"] = 1.0
        out["slope_y"] = 1.0
        out["intercept"] = 1.0
        out["resid_sd"] = math.sqrt(conditional_variance_trivariate(nu, rho2))
        out["r2"] = TRIVARIATE_R2
    else:
        raise ValueError(f"unknown design {design!r}")
    return out
