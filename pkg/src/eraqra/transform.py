"""Variance-stabilizing asinh transform and Monte Carlo inversion to price scale."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWindowError, InvalidDistributionError
from .distribution import LevelGrid, QuantileCurve


@dataclass(frozen=True)
class NormalizationStats:
    """Per-hour mean and standard deviation of calibration-window prices."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DegenerateWindowError(
                f"calibration window has non-positive price std ({self.sigma})")


@dataclass(frozen=True)
class McConfig:
    """Scenario count and seed for Monte Carlo inversion."""

    n_scenarios: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.n_scenarios < 1:
            raise ValueError("n_scenarios must be >= 1")


def window_stats(prices: np.ndarray) -> list[NormalizationStats]:
    """One NormalizationStats per hour from a [day x 24] calibration block.

    Sigma uses the unbiased (n-1) estimator.
    """
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 2 or prices.shape[1] != 24:
        raise ValueError("expected a [day x 24] price block")
    mu = prices.mean(axis=0)
    sigma = prices.std(axis=0, ddof=1)
    return [NormalizationStats(mu=float(m), sigma=float(s))
            for m, s in zip(mu, sigma)]


def asinh_transform(price, stats: NormalizationStats):
    """log(y + sqrt(y^2 + 1)) with y the standardized price."""
    y = (np.asarray(price, dtype=float) - stats.mu) / stats.sigma
    out = np.arcsinh(y)
    return float(out) if out.ndim == 0 else out


def sinh_invert(transformed, stats: NormalizationStats):
    """sigma * sinh(x) + mu, the inverse of asinh_transform."""
    out = stats.sigma * np.sinh(np.asarray(transformed, dtype=float)) + stats.mu
    return float(out) if out.ndim == 0 else out


def invert_distribution(curve: QuantileCurve, stats: NormalizationStats,
                        cfg: McConfig,
                        target: LevelGrid | None = None) -> QuantileCurve:
    """Map a transformed-scale predictive distribution back to prices.

    Draws scenarios by inverse-transform sampling (uniform levels, linear
    interpolation between grid points, clamped at the outermost levels),
    inverts each through sinh, and returns empirical quantiles of the
    inverted sample.  Deterministic given cfg.seed.
    """
    if target is None:
        target = curve.grid
    values = np.asarray(curve.values, dtype=float)
    if np.any(np.diff(values) < 0):
        raise InvalidDistributionError("input quantile curve is not monotone")
    rng = np.random.default_rng(cfg.seed)
    u = rng.uniform(size=cfg.n_scenarios)
    u = np.clip(u, curve.grid.levels[0], curve.grid.levels[-1])
    scenarios = np.interp(u, curve.grid.levels, values)
    prices = sinh_invert(scenarios, stats)
    out = np.quantile(prices, target.levels)
    return QuantileCurve(grid=target, values=out)
