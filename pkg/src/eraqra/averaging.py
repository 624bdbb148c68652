"""QRA and ERA: per-level regression of prices on a pool of point forecasts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arx import PointForecastMatrix
from .distribution import ExpectileCurve, LevelGrid, QuantileCurve, repair_crossing
from .errors import EraqraError
from .solvers import WeightVector, expectile_fit, quantile_fit


@dataclass(frozen=True)
class AveragingFit:
    """Level-indexed combination weights for one hour."""

    method: str  # "QRA" or "ERA"
    grid: LevelGrid
    weights: tuple[WeightVector, ...]

    def __post_init__(self):
        if self.method not in ("QRA", "ERA"):
            raise ValueError(f"unknown averaging method {self.method!r}")
        if len(self.weights) != len(self.grid):
            raise ValueError("one weight vector per grid level required")
        k = len(self.weights[0].coefficients)
        if any(len(w.coefficients) != k for w in self.weights):
            raise ValueError("weight vectors must share column count")

    @property
    def n_models(self) -> int:
        return len(self.weights[0].coefficients)


def _check_pool(pool: PointForecastMatrix) -> None:
    n, k = pool.forecasts.shape
    if n < 2 * k:
        raise ValueError(f"need at least {2 * k} pool rows, have {n}")


def fit_qra(pool: PointForecastMatrix, grid: LevelGrid | None = None,
            solver: str = "lp") -> AveragingFit:
    """Quantile regression of actuals on the forecast pool, per grid level."""
    if grid is None:
        grid = LevelGrid.percentiles()
    _check_pool(pool)
    weights = []
    for alpha in grid.levels:
        try:
            weights.append(quantile_fit(pool.forecasts, pool.actuals,
                                        float(alpha), method=solver))
        except EraqraError as exc:
            raise type(exc)(f"QRA level {alpha}: {exc}") from exc
    return AveragingFit(method="QRA", grid=grid, weights=tuple(weights))


def fit_era(pool: PointForecastMatrix, grid: LevelGrid | None = None) -> AveragingFit:
    """Expectile regression of actuals on the forecast pool, per grid level."""
    if grid is None:
        grid = LevelGrid.expectile_default()
    _check_pool(pool)
    weights = []
    for tau in grid.levels:
        try:
            weights.append(expectile_fit(pool.forecasts, pool.actuals, float(tau)))
        except EraqraError as exc:
            raise type(exc)(f"ERA level {tau}: {exc}") from exc
    return AveragingFit(method="ERA", grid=grid, weights=tuple(weights))


def predict(fit: AveragingFit, target_forecasts: np.ndarray):
    """Combine target-day forecasts with the fitted weights, crossing-repaired.

    Returns an ExpectileCurve for ERA and a QuantileCurve for QRA.
    """
    x = np.asarray(target_forecasts, dtype=float).ravel()
    if x.shape != (fit.n_models,):
        raise ValueError(f"expected {fit.n_models} target forecasts, got {x.shape}")
    values = np.array([w.coefficients @ x for w in fit.weights])
    values = repair_crossing(values)
    cls = ExpectileCurve if fit.method == "ERA" else QuantileCurve
    return cls(grid=fit.grid, values=values)
