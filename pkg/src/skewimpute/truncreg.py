"""Maximum-likelihood regression for a response truncated below at ``c``.

The response is modelled as N(x'beta, sigma^2) observed only when it is at
least ``c``.  Optimization runs over ``theta = (beta, log sigma)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .core import sample_truncated_normal
from .errors import InsufficientData, InvalidData, NonConvergence
from .regression import design_matrix, ols_fit

MAX_ITER = 500
GRAD_TOL = 1e-6
NEWTON_STEPS = 20
MIN_SIGMA = 1e-8
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass
class TruncRegFit:
    coefficients: np.ndarray
    sigma: float
    lower_bound: float
    converged: bool
    iterations: int
    hessian_inverse: np.ndarray  # covariance of (beta, log sigma)
    loglik: float = float("nan")
    grad_norm: float = float("nan")
    trace: list = field(default_factory=list, repr=False)

    @property
    def theta(self) -> np.ndarray:
        return np.append(self.coefficients, math.log(self.sigma))


def _check(X, y, c):
    if np.any(y < c):
        raise InvalidData("response values below the truncation point")


def _pieces(theta, X, y, c):
    beta, log_sigma = theta[:-1], theta[-1]
    sigma = math.exp(log_sigma)
    mu = X @ beta
    r = (y - mu) / sigma
    a = (c - mu) / sigma
    return sigma, r, a


def _loglik_theta(theta, X, y, c):
    sigma, r, a = _pieces(theta, X, y, c)
    return float(np.sum(-0.5 * r * r - _HALF_LOG_2PI - theta[-1] - special.log_ndtr(-a)))


def _grad_theta(theta, X, y, c):
    sigma, r, a = _pieces(theta, X, y, c)
    lam = _hazard(a)
    g_beta = X.T @ (r - lam) / sigma
    # with a = -inf the product lam * a is 0 * inf
    lam_a = np.where(np.isfinite(a), lam * a, 0.0)
    g_ls = np.sum(r * r - 1.0 - lam_a)
    return np.append(g_beta, g_ls)


def _hessian_theta(theta, X, y, c):
    sigma, r, a = _pieces(theta, X, y, c)
    lam = _hazard(a)
    fin = np.isfinite(a)
    a0 = np.where(fin, a, 0.0)
    delta = np.where(fin, lam * (lam - a0), 0.0)
    p = X.shape[1]
    H = np.empty((p + 1, p + 1))
    H[:p, :p] = (X.T * (delta - 1.0)) @ X / sigma ** 2
    cross = X.T @ (-2.0 * r + delta * a0 + lam) / sigma
    H[:p, p] = H[p, :p] = cross
    H[p, p] = np.sum(-2.0 * r * r + delta * a0 * a0 + lam * a0)
    return H


def _hazard(a):
    # phi(a) / (1 - Phi(a)); zero at a = -inf
    return np.sqrt(2.0 / np.pi) / special.erfcx(np.asarray(a) / np.sqrt(2.0))


def truncreg_loglik(coefficients, sigma, predictors, response, c) -> float:
    """Log-likelihood of a left-truncated normal regression.

    ``predictors`` excludes the intercept; ``coefficients`` is intercept first.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    X = design_matrix(predictors)
    y = np.asarray(response, dtype=float)
    _check(X, y, c)
    theta = np.append(np.asarray(coefficients, dtype=float), math.log(sigma))
    return _loglik_theta(theta, X, y, c)


def truncreg_gradient(coefficients, sigma, predictors, response, c) -> np.ndarray:
    """Gradient with respect to ``(coefficients, log sigma)``."""
    X = design_matrix(predictors)
    y = np.asarray(response, dtype=float)
    theta = np.append(np.asarray(coefficients, dtype=float), math.log(sigma))
    return _grad_theta(theta, X, y, c)


def truncreg_hessian(coefficients, sigma, predictors, response, c) -> np.ndarray:
    X = design_matrix(predictors)
    y = np.asarray(response, dtype=float)
    theta = np.append(np.asarray(coefficients, dtype=float), math.log(sigma))
    return _hessian_theta(theta, X, y, c)


def truncreg_fit(predictors, response, c: float, init=None) -> TruncRegFit:
    """Fit by a short Nelder-Mead polish, BFGS, then Newton refinement.

    Starts from OLS unless ``init = (coefficients..., log sigma)`` is given.
    Raises :class:`NonConvergence` (carrying the partial fit) when the
    gradient norm is still above ``GRAD_TOL`` after ``MAX_ITER`` iterations,
    when sigma collapses, or when the Hessian is not negative definite.
    """
    X = design_matrix(predictors)
    y = np.asarray(response, dtype=float)
    n, p = X.shape
    if n <= p + 1:
        raise InsufficientData(f"need more than {p + 1} observations, got {n}")
    _check(X, y, c)
    if init is None:
        ols = ols_fit(predictors, y)
        theta0 = np.append(ols.coefficients, 0.5 * math.log(max(ols.residual_variance, 1e-12)))
    else:
        theta0 = np.asarray(init, dtype=float)

    def nll(t):
        v = -_loglik_theta(t, X, y, c)
        return v if np.isfinite(v) else np.inf

    def ngrad(t):
        return -_grad_theta(t, X, y, c)

    trace = [-nll(theta0)]
    nm = optimize.minimize(nll, theta0, method="Nelder-Mead",
                           options={"maxiter": 50 * (p + 1), "xatol": 1e-6, "fatol": 1e-9})
    theta = nm.x if nm.fun <= -trace[0] else theta0
    trace.append(-nll(theta))
    bfgs = optimize.minimize(nll, theta, jac=ngrad, method="BFGS",
                             options={"maxiter": MAX_ITER - NEWTON_STEPS, "gtol": GRAD_TOL})
    iterations = int(bfgs.nit)
    if bfgs.fun <= -trace[-1]:
        theta = bfgs.x
        trace.append(-bfgs.fun)
    # Newton polish with step halving; never accepts a decrease in loglik
    for _ in range(NEWTON_STEPS):
        g = _grad_theta(theta, X, y, c)
        if np.linalg.norm(g) < GRAD_TOL:
            break
        H = _hessian_theta(theta, X, y, c)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            break
        if g @ step <= 0:  # not an ascent direction
            step = g / max(np.linalg.norm(g), 1.0)
        f0 = trace[-1]
        for _ in range(40):
            f1 = -nll(theta + step)
            if f1 >= f0:
                theta = theta + step
                trace.append(f1)
                break
            step = step * 0.5
        else:
            break
        iterations += 1

    g = _grad_theta(theta, X, y, c)
    H = _hessian_theta(theta, X, y, c)
    sigma = math.exp(theta[-1])
    grad_norm = float(np.linalg.norm(g))
    try:
        cov = np.linalg.inv(-H)
        pd = bool(np.all(np.linalg.eigvalsh(0.5 * (cov + cov.T)) > 0))
    except np.linalg.LinAlgError:
        cov, pd = np.full_like(H, np.nan), False
    fit = TruncRegFit(
        coefficients=theta[:-1].copy(),
        sigma=sigma,
        lower_bound=float(c),
        converged=False,
        iterations=iterations,
        hessian_inverse=cov,
        loglik=-nll(theta),
        grad_norm=grad_norm,
        trace=trace,
    )
    if not (sigma > MIN_SIGMA):
        raise NonConvergence(f"sigma collapsed to {sigma:.3g}", fit)
    if not np.isfinite(fit.loglik) or grad_norm >= GRAD_TOL or iterations > MAX_ITER:
        raise NonConvergence(
            f"gradient norm {grad_norm:.3g} after {iterations} iterations", fit
        )
    if not pd:
        raise NonConvergence("Hessian is not negative definite at the optimum", fit)
    fit.converged = True
    return fit


def truncreg_impute(fit: TruncRegFit, predictor_rows, rng: np.random.Generator,
                    stats=None) -> np.ndarray:
    """Posterior-style imputations from a converged fit.

    Parameters ``(beta, log sigma)`` are drawn once from their asymptotic
    normal distribution, then each row gets a draw from N(x'beta, sigma^2)
    truncated below at ``fit.lower_bound``.  A row whose mean lies so far
    below the bound that no tail mass remains gets ``bound + tiny jitter``;
    these are counted in ``stats["tail_fallbacks"]``.
    """
    if not fit.converged:
        raise ValueError("cannot impute from a fit that did not converge")
    X = design_matrix(predictor_rows)
    L = np.linalg.cholesky(fit.hessian_inverse)
    theta = fit.theta + L @ rng.standard_normal(len(fit.theta))
    beta, sigma = theta[:-1], math.exp(theta[-1])
    mu = X @ beta
    c = fit.lower_bound
    ok = special.log_ndtr((mu - c) / sigma) >= math.log(1e-300)
    out = np.empty(len(mu))
    if np.any(ok):
        out[ok] = sample_truncated_normal(mu[ok], sigma, c, rng)
    n_bad = int(np.count_nonzero(~ok))
    if n_bad:
        out[~ok] = c + 1e-12 * (1.0 + rng.random(n_bad))
    if stats is not None:
        stats["tail_fallbacks"] += n_bad
    return out

