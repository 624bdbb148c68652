"""Regression machinery: OLS, linear quantile and expectile fits, sample expectiles.

The expectile fit minimizes the asymmetric squared loss via iteratively
reweighted least squares; the quantile fit minimizes the check loss either
exactly (linear program) or by smoothed IRLS.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, linprog

from .errors import ConvergenceError


@dataclass(frozen=True)
class WeightVector:
    """Estimated coefficients for one asymmetry level."""

    level: float
    coefficients: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must be in (0,1), got {self.level}")


def _check_design(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError("design matrix must be 2-dimensional")
    if X.shape[0] != y.shape[0]:
        raise ValueError("design and response lengths differ")
    if X.shape[0] < X.shape[1]:
        raise ValueError("fewer rows than columns in design matrix")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("non-finite entries in design or response")
    return X, y


def ols_fit(X: np.ndarray, y: np.ndarray,
            expected_rank: int | None = None) -> np.ndarray:
    """Least-squares coefficients via SVD (minimum-norm if rank deficient).

    `expected_rank` silences the rank warning for designs whose deficiency
    is structural (e.g. a set of columns that sums to zero by construction).
    """
    X, y = _check_design(X, y)
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < min(X.shape[1], expected_rank or X.shape[1]):
        warnings.warn(f"rank-deficient design ({rank} < {X.shape[1]}); "
                      "returning minimum-norm solution", stacklevel=2)
    return coef


def expectile_loss(residuals: np.ndarray, tau: float) -> float:
    r = np.asarray(residuals, dtype=float)
    w = np.where(r >= 0, tau, 1.0 - tau)
    return float(np.sum(w * r * r))


def quantile_loss(residuals: np.ndarray, alpha: float) -> float:
    r = np.asarray(residuals, dtype=float)
    w = np.where(r >= 0, alpha, 1.0 - alpha)
    return float(np.sum(w * np.abs(r)))


def _wls(X: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    sw = np.sqrt(w)
    coef, _, _, _ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    return coef


def expectile_fit(X: np.ndarray, y: np.ndarray, tau: float,
                  tol: float = 1e-8, max_iter: int = 100) -> WeightVector:
    """Minimize sum of tau-weighted squared residuals by IRLS.

    Residual weights are tau above the fit and 1-tau below; iteration stops
    when the largest coefficient change falls under `tol` or the loss
    plateaus (on rank-deficient designs the min-norm coefficients can
    jitter on sign flips of near-zero residuals while the fit is done).
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0,1), got {tau}")
    X, y = _check_design(X, y)
    coef = ols_fit(X, y)
    if tau == 0.5:
        return WeightVector(level=tau, coefficients=coef)
    last_obj = np.inf
    for _ in range(max_iter):
        r = y - X @ coef
        w = np.where(r >= 0, tau, 1.0 - tau)
        new = _wls(X, y, w)
        delta = np.max(np.abs(new - coef))
        coef = new
        obj = expectile_loss(y - X @ coef, tau)
        if delta < tol or obj > last_obj * (1.0 - 1e-12):
            return WeightVector(level=tau, coefficients=coef)
        last_obj = obj
    raise ConvergenceError(
        f"expectile IRLS did not converge in {max_iter} iterations (tau={tau})",
        last_iterate=coef)


def _quantile_fit_lp(X: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    """Exact check-loss minimizer: min a*1'u + (1-a)*1'v, Xw + u - v = y."""
    n, k = X.shape
    c = np.concatenate([np.zeros(k), np.full(n, alpha), np.full(n, 1.0 - alpha)])
    A_eq = np.hstack([X, np.eye(n), -np.eye(n)])
    bounds = [(None, None)] * k + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs")
    if not res.success:
        raise ConvergenceError(f"quantile LP failed: {res.message}")
    return res.x[:k]


def _quantile_fit_irls(X: np.ndarray, y: np.ndarray, alpha: float,
                       tol: float, max_iter: int) -> np.ndarray:
    """Smoothed IRLS: |r| replaced by sqrt(r^2 + eps), eps shrinking to 1e-12.

    Each smoothing stage warm-starts the next; a stage stops on a small
    coefficient step or when the check loss plateaus (IRLS steps shrink
    sublinearly near kinks while the objective is already converged).
    Only a final stage that is still making progress at the iteration cap
    counts as non-convergence.
    """
    coef = ols_fit(X, y)
    scale = max(float(np.std(y)), 1e-8)
    stages = scale * scale * np.array([1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12])
    for stage, eps in enumerate(stages):
        last_obj = np.inf
        converged = False
        for _ in range(max_iter):
            r = y - X @ coef
            asym = np.where(r >= 0, alpha, 1.0 - alpha)
            w = asym / np.sqrt(r * r + eps)
            new = _wls(X, y, w)
            delta = np.max(np.abs(new - coef))
            coef = new
            obj = quantile_loss(y - X @ coef, alpha)
            if delta < tol * max(1.0, np.max(np.abs(coef))) \
                    or obj > last_obj - 1e-10 * max(1.0, obj):
                converged = True
                break
            last_obj = obj
        if not converged and stage == len(stages) - 1:
            raise ConvergenceError(
                f"quantile IRLS did not converge (alpha={alpha}, eps={eps})",
                last_iterate=coef)
    return coef


def quantile_fit(X: np.ndarray, y: np.ndarray, alpha: float,
                 method: str = "lp", tol: float = 1e-8,
                 max_iter: int = 1000) -> WeightVector:
    """Minimize the check loss; `method` is "lp" (exact) or "irls" (smoothed)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    X, y = _check_design(X, y)
    if method == "lp":
        coef = _quantile_fit_lp(X, y, alpha)
    elif method == "irls":
        coef = _quantile_fit_irls(X, y, alpha, tol, max_iter)
    else:
        raise ValueError(f"unknown quantile solver {method!r}")
    return WeightVector(level=alpha, coefficients=coef)


def sample_expectile(y: np.ndarray, tau: float) -> float:
    """Root of the empirical expectile first-order condition.

    tau * mean((y-e)+) = (1-tau) * mean((e-y)+); bracketed between the
    sample min and max, where the condition changes sign.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must be in (0,1), got {tau}")
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("empty sample")
    lo, hi = float(y.min()), float(y.max())
    # an (almost) constant sample is its own expectile; also keeps the
    # bracketing tolerance below from underflowing on subnormal spreads
    if hi - lo <= 1e-300 + 1e-14 * max(abs(lo), abs(hi)):
        return 0.5 * (lo + hi)

    def foc(e):
        return tau * np.mean(np.maximum(y - e, 0.0)) \
            - (1.0 - tau) * np.mean(np.maximum(e - y, 0.0))

    return float(brentq(foc, lo, hi, xtol=max(1e-10 * (hi - lo), 5e-324),
                        rtol=1e-15))
