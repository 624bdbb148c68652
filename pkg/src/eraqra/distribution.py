"""Predictive-distribution algebra: curves, historical simulation, and the
expectile-to-quantile conversion via discrete CDF recovery.

The conversion recovers a CDF supported on the expectile values by solving
for nonnegative point masses whose implied theoretical expectiles match the
given curve, then inverts the interpolated CDF at the target levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize, nnls

from .errors import ConversionError, InvalidDistributionError


def _paper_expectile_levels() -> np.ndarray:
    lo = [0.001, 0.0025, 0.005, 0.0075, 0.01]
    mid = [round(0.02 * i, 2) for i in range(1, 50)]
    hi = [0.99, 0.9925, 0.995, 0.9975, 0.999]
    return np.array(lo + mid + hi)


@dataclass(frozen=True)
class LevelGrid:
    """Strictly increasing probability levels in (0, 1)."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", lv)
        if lv.ndim != 1 or lv.size == 0:
            raise ValueError("levels must be a non-empty vector")
        if np.any(lv <= 0) or np.any(lv >= 1):
            raise ValueError("levels must lie strictly inside (0, 1)")
        if np.any(np.diff(lv) <= 0):
            raise ValueError("levels must be strictly increasing")

    def __len__(self):
        return len(self.levels)

    def index_of(self, level: float) -> int:
        idx = int(np.argmin(np.abs(self.levels - level)))
        if not np.isclose(self.levels[idx], level, rtol=0, atol=1e-12):
            raise KeyError(f"level {level} not on grid")
        return idx

    @classmethod
    def percentiles(cls) -> "LevelGrid":
        return cls(np.arange(1, 100) / 100.0)

    @classmethod
    def expectile_default(cls) -> "LevelGrid":
        """Dense tail-heavy grid used for expectile-based methods."""
        return cls(_paper_expectile_levels())


@dataclass(frozen=True)
class _Curve:
    grid: LevelGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (len(self.grid),):
            raise ValueError("values length must match grid")
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite curve values")

    @property
    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0))

    def value_at(self, level: float) -> float:
        return float(self.values[self.grid.index_of(level)])


class ExpectileCurve(_Curve):
    """Monotone level -> expectile map of a predictive distribution."""


class QuantileCurve(_Curve):
    """Monotone level -> quantile map of a predictive distribution."""


@dataclass(frozen=True)
class DistributionApproximation:
    """Discrete CDF approximation: support x, CDF F, partial moments G.

    G(x_j) accumulates y dF(y) up to x_j; the distribution mean is G at the
    top of the support (plus any unassigned tail mass, which is assumed
    negligible).
    """

    x: np.ndarray
    cdf: np.ndarray
    partial_moment: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        F = np.asarray(self.cdf, dtype=float)
        G = np.asarray(self.partial_moment, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "cdf", F)
        object.__setattr__(self, "partial_moment", G)
        if not (x.shape == F.shape == G.shape) or x.ndim != 1:
            raise ValueError("x, cdf, partial_moment must be equal-length vectors")
        if np.any(np.diff(x) < 0):
            raise InvalidDistributionError("support must be non-decreasing")
        if np.any(np.diff(F) < -1e-12) or F[0] < -1e-12 or F[-1] > 1 + 1e-12:
            raise InvalidDistributionError("CDF must be non-decreasing within [0, 1]")

    @classmethod
    def from_masses(cls, x: np.ndarray, masses: np.ndarray) -> "DistributionApproximation":
        x = np.asarray(x, dtype=float)
        p = np.asarray(masses, dtype=float)
        return cls(x=x, cdf=np.minimum(np.cumsum(p), 1.0),
                   partial_moment=np.cumsum(x * p))

    @property
    def masses(self) -> np.ndarray:
        return np.diff(self.cdf, prepend=0.0)

    @property
    def mean(self) -> float:
        return float(self.partial_moment[-1])

    def quantile(self, alpha: float) -> float:
        """Inverse of the linearly interpolated CDF, clamped at the support ends."""
        return float(np.interp(alpha, self.cdf, self.x))

    def partial_moment_at(self, value: float) -> float:
        return float(np.interp(value, self.x, self.partial_moment))

    def expectile(self, tau: float) -> float:
        """Expectile of the discrete distribution, by root bracketing."""
        p = self.masses
        lo, hi = float(self.x[0]), float(self.x[-1])
        if hi == lo:
            return lo

        def foc(e):
            return tau * np.sum(p * np.maximum(self.x - e, 0.0)) \
                - (1.0 - tau) * np.sum(p * np.maximum(e - self.x, 0.0))

        return float(brentq(foc, lo, hi, xtol=1e-12 * max(1.0, hi - lo)))


def repair_crossing(values: np.ndarray) -> np.ndarray:
    """Isotonic rearrangement: sort values, keep level order. Idempotent."""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite values")
    return np.sort(values)


def historical_sim_quantiles(point_forecast: float, errors: np.ndarray,
                             grid: LevelGrid) -> QuantileCurve:
    """Shift the point forecast by empirical quantiles of past errors.

    Errors follow the forecast-minus-actual convention, so the predictive
    alpha-quantile is the forecast plus the alpha-quantile of the negated
    errors.
    """
    errors = np.asarray(errors, dtype=float).ravel()
    if errors.size == 0:
        raise ValueError("empty error sample")
    vals = point_forecast + np.quantile(-errors, grid.levels)
    return QuantileCurve(grid=grid, values=repair_crossing(vals))


def historical_sim_expectiles(point_forecast: float, errors: np.ndarray,
                              grid: LevelGrid) -> ExpectileCurve:
    """As historical_sim_quantiles, with sample expectiles per level."""
    from .solvers import sample_expectile

    errors = np.asarray(errors, dtype=float).ravel()
    if errors.size == 0:
        raise ValueError("empty error sample")
    neg = -errors
    vals = np.array([point_forecast + sample_expectile(neg, t)
                     for t in grid.levels])
    return ExpectileCurve(grid=grid, values=repair_crossing(vals))


def _conversion_objective(p, e, tau, center):
    """Squared distance between given and theoretical expectiles, with gradient."""
    F = np.minimum(np.cumsum(p), 1.0)
    G = np.cumsum(e * p)
    num = (1.0 - tau) * G + tau * (center - G)
    den = (1.0 - tau) * F + tau * (1.0 - F)
    den = np.where(np.abs(den) < 1e-12, 1e-12, den)
    theo = num / den
    r = e - theo
    c = 1.0 - 2.0 * tau
    dt_dG = c / den
    dt_dF = -num * c / den ** 2
    t1 = -2.0 * r * dt_dG
    t2 = -2.0 * r * dt_dF
    s1 = np.cumsum(t1[::-1])[::-1]
    s2 = np.cumsum(t2[::-1])[::-1]
    return float(np.sum(r * r)), e * s1 + s2


def recover_distribution(curve: ExpectileCurve,
                         refine: bool = True) -> DistributionApproximation:
    """Recover a discrete CDF whose theoretical expectiles match a curve.

    Point masses at the expectile values are obtained from the nonnegative
    least-squares solution of the linearized expectile fixed-point
    equations, optionally refined by minimizing the squared distance
    between given and theoretical expectiles (projected SLSQP over the
    simplex of mass increments).
    """
    tau = curve.grid.levels
    e = np.asarray(curve.values, dtype=float)
    if np.any(np.diff(e) < 0):
        raise InvalidDistributionError("expectile curve is not monotone")
    n = len(e)
    if n < 10:
        raise ConversionError("need at least 10 expectile grid points")
    center = float(np.interp(0.5, tau, e))  # the 0.5-expectile, i.e. the mean

    # For tau != 1/2 the fixed point e_tau F(e_tau) - G(e_tau) relation is
    # linear in the masses: sum_{i<=j} (e_j - e_i) p_i = tau_j (e_j - m) / (2 tau_j - 1).
    mask = np.abs(tau - 0.5) > 1e-12
    A = np.tril(e[:, None] - e[None, :])[mask]
    with np.errstate(invalid="ignore", divide="ignore"):
        b = (tau * (e - center) / (2.0 * tau - 1.0))[mask]
    scale = max(float(np.abs(A).max()), 1e-12)
    w = 10.0 * scale  # soft unit-mass row
    A_full = np.vstack([A, w * np.ones((1, n))])
    b_full = np.concatenate([b, [w]])
    try:
        p, _ = nnls(A_full, b_full)
    except Exception as exc:
        raise ConversionError(f"CDF recovery failed: {exc}") from exc
    total = p.sum()
    if total > 1.0:
        p = p / total

    if refine:
        cons = ({"type": "ineq", "fun": lambda q: 1.0 - q.sum(),
                 "jac": lambda q: -np.ones_like(q)},)
        res = minimize(_conversion_objective, p, args=(e, tau, center),
                       jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * n,
                       constraints=cons,
                       options={"maxiter": 100, "ftol": 1e-14})
        if np.all(np.isfinite(res.x)) and \
                res.fun <= _conversion_objective(p, e, tau, center)[0]:
            p = np.clip(res.x, 0.0, None)
            total = p.sum()
            if total > 1.0:
                p = p / total
    return DistributionApproximation.from_masses(e, p)


def expectiles_to_quantiles(curve: ExpectileCurve, target: LevelGrid,
                            refine: bool = True) -> QuantileCurve:
    """Convert an expectile curve to quantiles on the target grid.

    Degenerate (flat) curves short-circuit to a flat quantile curve; target
    levels outside the recovered CDF knots are clamped to the extreme knots.
    """
    e = np.asarray(curve.values, dtype=float)
    spread = float(e[-1] - e[0])
    if spread <= 1e-12 * max(1.0, float(np.abs(e).max())):
        return QuantileCurve(grid=target,
                             values=np.full(len(target), float(np.median(e))))
    dist = recover_distribution(curve, refine=refine)
    # Midpoint plotting positions: each atom represents the CDF mid-step.
    f_mid = dist.cdf - dist.masses / 2.0
    vals = np.interp(target.levels, f_mid, dist.x)
    return QuantileCurve(grid=target, values=repair_crossing(vals))


def h_level(alpha: float, dist: DistributionApproximation) -> float:
    """Expectile level tau with e_tau equal to the alpha-quantile.

    Evaluates [-alpha q + G(q)] / [-mean + 2 G(q) + (1 - 2 alpha) q] with
    q the alpha-quantile of the approximation.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    q = dist.quantile(alpha)
    gq = dist.partial_moment_at(q)
    mean = dist.mean
    den = -mean + 2.0 * gq + (1.0 - 2.0 * alpha) * q
    if abs(den) < 1e-300:
        raise InvalidDistributionError("degenerate distribution in h-function")
    tau = (-alpha * q + gq) / den
    return float(tau)
