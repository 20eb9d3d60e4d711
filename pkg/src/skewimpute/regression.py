"""OLS with coefficient covariance, and Bayesian posterior draws of its parameters."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit, InsufficientData, SingularDesign

PIVOT_TOL = 1e-10
EXACT_FIT_TOL = 1e-20  # SSE / SST below this counts as an exact fit


@dataclass(frozen=True)
class RegressionFit:
    coefficients: np.ndarray  # intercept first
    residual_variance: float
    coefficient_covariance: np.ndarray
    n_obs: int
    p: int
    xtx_inv: np.ndarray
    total_ss: float = 0.0

    @property
    def df(self) -> int:
        return self.n_obs - self.p


@dataclass(frozen=True)
class PosteriorDraw:
    coefficients: np.ndarray
    residual_variance: float
    chi_square_draw: float
    prior_df: int = 0


def design_matrix(predictors) -> np.ndarray:
    """Prepend an intercept column to ``predictors`` (1-D or 2-D)."""
    X = np.asarray(predictors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return np.column_stack([np.ones(X.shape[0]), X])


def _chol_inverse(A: np.ndarray) -> np.ndarray:
    # columns were scaled to unit diagonal, so the pivot test is relative
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign("design matrix is not full rank") from exc
    if np.min(np.diag(L)) ** 2 < PIVOT_TOL:
        raise SingularDesign("design matrix is numerically rank deficient")
    Linv = np.linalg.solve(L, np.eye(A.shape[0]))
    return Linv.T @ Linv


def ols_fit(predictors, response) -> RegressionFit:
    """Least squares of ``response`` on an intercept plus ``predictors``."""
    X = design_matrix(predictors)
    y = np.asarray(response, dtype=float)
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError("response length does not match predictors")
    if n <= p:
        raise InsufficientData(f"need more than {p} complete rows, got {n}")
    scale = np.sqrt(np.einsum("ij,ij->j", X, X))
    if np.any(scale == 0):
        raise SingularDesign("a predictor column is identically zero")
    Xs = X / scale
    xtx_inv_s = _chol_inverse(Xs.T @ Xs)
    beta = (xtx_inv_s @ (Xs.T @ y)) / scale
    resid = y - X @ beta
    s2 = float(resid @ resid) / (n - p)
    xtx_inv = xtx_inv_s / np.outer(scale, scale)
    return RegressionFit(
        coefficients=beta,
        residual_variance=s2,
        coefficient_covariance=s2 * xtx_inv,
        n_obs=n,
        p=p,
        xtx_inv=xtx_inv,
        total_ss=float(np.sum((y - y.mean()) ** 2)),
    )


def posterior_draw_regression(fit: RegressionFit, prior_df: int, rng: np.random.Generator) -> PosteriorDraw:
    """Draw (coefficients, residual variance) from the noninformative-prior posterior.

    sigma2 = s2 * df / U with U ~ chi2(df + prior_df), then
    coefficients ~ N(beta_hat, sigma2 * (X'X)^-1).
    """
    sse = fit.residual_variance * fit.df
    if not sse > EXACT_FIT_TOL * fit.total_ss:
        raise DegenerateFit("residual variance is zero; the data fit exactly")
    u = rng.chisquare(fit.df + prior_df)
    sigma2 = fit.residual_variance * fit.df / u
    try:
        L = np.linalg.cholesky(fit.xtx_inv)
    except np.linalg.LinAlgError as exc:
        raise SingularDesign("coefficient covariance is not positive definite") from exc
    coef = fit.coefficients + np.sqrt(sigma2) * (L @ rng.standard_normal(fit.p))
    return PosteriorDraw(coef, float(sigma2), float(u), prior_df)


def posterior_draw_univariate(n_obs: int, mean: float, variance: float, prior_df: int,
                              rng: np.random.Generator) -> PosteriorDraw:
    if n_obs < 2:
        raise InsufficientData("posterior draws need at least two observations")
    if not variance > 0:
        raise DegenerateFit("sample variance is zero")
    u = rng.chisquare(n_obs - 1 + prior_df)
    sigma2 = variance * (n_obs - 1) / u
    mu = mean + np.sqrt(sigma2 / n_obs) * rng.standard_normal()
    return PosteriorDraw(np.array([mu]), float(sigma2), float(u), prior_df)
