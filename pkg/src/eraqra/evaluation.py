"""Scoring and statistical testing of probabilistic forecasts.

Pinball loss per cell, empirical coverage with Kupiec's unconditional
coverage test, one-sided Diebold-Mariano comparisons, and aggregation into
the report tensors (method x hour x percentile).
"""

from __future__ import annotations

import contextlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.stats import chi2, norm

from .errors import IncompleteReportError

COVERAGE_LEVELS = (0.05, 0.95)


@contextlib.contextmanager
def warnings_ignore_all_nan():
    """Suppress the all-NaN slice warnings emitted for fully failed cells."""
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Mean of empty slice")
        warnings.filterwarnings("ignore", message="All-NaN slice")
        yield


def pinball(q_hat, actual, alpha: float):
    """Check-loss score of a quantile forecast; lower is better."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    q_hat = np.asarray(q_hat, dtype=float)
    actual = np.asarray(actual, dtype=float)
    under = actual < q_hat
    out = np.where(under, (1.0 - alpha) * (q_hat - actual),
                   alpha * (actual - q_hat))
    return float(out) if out.ndim == 0 else out


def coverage(curve_values: np.ndarray, actuals: np.ndarray) -> float:
    """Fraction of days with the actual strictly below the quantile forecast."""
    curve_values = np.asarray(curve_values, dtype=float)
    actuals = np.asarray(actuals, dtype=float)
    if curve_values.shape != actuals.shape:
        raise ValueError("curve/actual shapes differ")
    return float(np.mean(actuals < curve_values))


@dataclass(frozen=True)
class KupiecResult:
    statistic: float
    p_value: float
    reject: bool


def kupiec_test(hits: int, n: int, alpha: float,
                sig: float = 0.05) -> KupiecResult:
    """Likelihood-ratio test of hits/n against the nominal rate alpha.

    Boundary counts use the 0*log(0) = 0 convention; the statistic is
    compared against chi-square with one degree of freedom.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if not 0 <= hits <= n:
        raise ValueError("hits must lie in [0, n]")
    x = float(hits)
    rate = x / n

    def loglik(p):
        out = 0.0
        if n - x > 0:
            out += (n - x) * np.log(1.0 - p)
        if x > 0:
            out += x * np.log(p)
        return out

    lr = -2.0 * loglik(alpha) + 2.0 * loglik(rate)
    lr = max(float(lr), 0.0)
    p_value = float(chi2.sf(lr, df=1))
    return KupiecResult(statistic=lr, p_value=p_value, reject=p_value < sig)


@dataclass(frozen=True)
class DmResult:
    statistic: float
    p_value: float
    a_beats_b: bool
    degenerate: bool = False


def dm_test(loss_a: np.ndarray, loss_b: np.ndarray, sig: float = 0.05,
            hac: bool = False, maxlags: int | None = None) -> DmResult:
    """One-sided Diebold-Mariano test on two aligned loss series.

    The statistic is mean(d)/sqrt(var(d)/T) with d = loss_a - loss_b; the
    p-value comes from the lower normal tail, so small p favours a.  Plain
    sample variance by default; `hac` switches to a Newey-West estimate.
    """
    a = np.asarray(loss_a, dtype=float).ravel()
    b = np.asarray(loss_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("loss series lengths differ")
    t = len(a)
    if t < 30:
        raise ValueError(f"need at least 30 observations, have {t}")
    d = a - b
    mean = float(d.mean())
    if hac:
        lags = maxlags if maxlags is not None else int(np.floor(t ** (1 / 3)))
        dc = d - mean
        lrv = float(dc @ dc) / t
        for lag in range(1, lags + 1):
            gamma = float(dc[lag:] @ dc[:-lag]) / t
            lrv += 2.0 * (1.0 - lag / (lags + 1.0)) * gamma
        var = max(lrv, 0.0)
    else:
        var = float(d.var(ddof=1))
    if var == 0.0:
        if mean == 0.0:
            return DmResult(statistic=0.0, p_value=0.5, a_beats_b=False)
        stat = -np.inf if mean < 0 else np.inf
        return DmResult(statistic=stat, p_value=0.0 if mean < 0 else 1.0,
                        a_beats_b=mean < 0, degenerate=True)
    stat = mean / np.sqrt(var / t)
    p_value = float(norm.cdf(stat))
    return DmResult(statistic=float(stat), p_value=p_value,
                    a_beats_b=mean < 0 and p_value < sig)


@dataclass
class EvaluationReport:
    """Score tensors and test outcomes indexed by method x hour x percentile."""

    methods: list[str]
    percentiles: np.ndarray  # evaluation levels
    pinball: np.ndarray  # [method, 24, n_pct] mean scores
    coverage: np.ndarray  # [method, 24, 2] at COVERAGE_LEVELS
    kupiec_p: np.ndarray  # [method, 24, 2]
    kupiec_reject: np.ndarray  # [method, 24, 2] bool
    dm_p_by_hour: np.ndarray  # [method, method, 24]
    dm_p_by_pct: np.ndarray  # [method, method, n_pct]
    sig: float = 0.05

    @property
    def hourly_pinball(self) -> np.ndarray:
        """[method, 24]: mean over percentiles."""
        return self.pinball.mean(axis=2)

    @property
    def percentile_pinball(self) -> np.ndarray:
        """[method, n_pct]: mean over hours."""
        return self.pinball.mean(axis=1)

    @property
    def grand_pinball(self) -> np.ndarray:
        return self.pinball.mean(axis=(1, 2))

    @property
    def dm_hour_counts(self) -> np.ndarray:
        """[row, col]: hours where the row method is significantly worse."""
        return (self.dm_p_by_hour < self.sig).sum(axis=2)

    @property
    def dm_pct_counts(self) -> np.ndarray:
        return (self.dm_p_by_pct < self.sig).sum(axis=2)

    @property
    def kupiec_hour_counts(self) -> np.ndarray:
        """[method, 2]: hours with significant coverage deviation."""
        return self.kupiec_reject.sum(axis=1)

    def to_frame(self) -> pd.DataFrame:
        """Long-format table: method, hour, percentile, metric, value."""
        rows = []
        for i, method in enumerate(self.methods):
            for h in range(24):
                for j, pct in enumerate(self.percentiles):
                    rows.append((method, h, float(pct), "pinball",
                                 self.pinball[i, h, j]))
                for j, lvl in enumerate(COVERAGE_LEVELS):
                    rows.append((method, h, lvl, "coverage",
                                 self.coverage[i, h, j]))
                    rows.append((method, h, lvl, "kupiec_p",
                                 self.kupiec_p[i, h, j]))
        return pd.DataFrame(rows, columns=["method", "hour", "percentile",
                                           "metric", "value"])

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)

    def to_dict(self) -> dict:
        def pair_dict(mat):
            return {f"{a}|{b}": mat[i, j].tolist()
                    for i, a in enumerate(self.methods)
                    for j, b in enumerate(self.methods) if i != j}

        return {
            "methods": self.methods,
            "percentiles": self.percentiles.tolist(),
            "sig": self.sig,
            "pinball": {m: self.pinball[i].tolist()
                        for i, m in enumerate(self.methods)},
            "hourly_pinball": {m: self.hourly_pinball[i].tolist()
                               for i, m in enumerate(self.methods)},
            "percentile_pinball": {m: self.percentile_pinball[i].tolist()
                                   for i, m in enumerate(self.methods)},
            "grand_pinball": {m: float(self.grand_pinball[i])
                              for i, m in enumerate(self.methods)},
            "coverage": {m: self.coverage[i].tolist()
                         for i, m in enumerate(self.methods)},
            "kupiec_p": {m: self.kupiec_p[i].tolist()
                         for i, m in enumerate(self.methods)},
            "kupiec_hour_counts": {m: self.kupiec_hour_counts[i].tolist()
                                   for i, m in enumerate(self.methods)},
            "dm_p_by_hour": pair_dict(self.dm_p_by_hour),
            "dm_p_by_percentile": pair_dict(self.dm_p_by_pct),
            "dm_hour_counts": pair_dict(self.dm_hour_counts),
            "dm_percentile_counts": pair_dict(self.dm_pct_counts),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def aggregate_report(curves: np.ndarray, actuals: np.ndarray,
                     methods: list[str], percentiles: np.ndarray,
                     sig: float = 0.05,
                     allow_missing: bool = False) -> EvaluationReport:
    """Build the full report from stacked forecast curves.

    `curves` has shape [day, 24, method, level] of predicted quantiles on
    the `percentiles` grid; `actuals` has shape [day, 24].  NaN cells are
    treated as missing: they abort with a list of offending cells unless
    `allow_missing`, in which case scores skip them.
    """
    curves = np.asarray(curves, dtype=float)
    actuals = np.asarray(actuals, dtype=float)
    n_days, n_hours, n_methods, n_pct = curves.shape
    if n_hours != 24 or n_methods != len(methods) or n_pct != len(percentiles):
        raise ValueError("curve tensor shape does not match methods/levels")
    if actuals.shape != (n_days, 24):
        raise ValueError("actuals shape mismatch")
    bad = np.argwhere(~np.isfinite(curves).all(axis=3))
    if len(bad) and not allow_missing:
        missing = [(methods[m], int(h), int(d)) for d, h, m in bad[:20]]
        raise IncompleteReportError(
            f"{len(bad)} missing forecast cells, e.g. {missing[:5]}",
            missing=missing)

    # per-day pinball losses [day, hour, method, pct]
    alpha = percentiles[None, None, None, :]
    act = actuals[:, :, None, None]
    with np.errstate(invalid="ignore"):
        under = act < curves
        losses = np.where(under, (1.0 - alpha) * (curves - act),
                          alpha * (act - curves))

    with warnings_ignore_all_nan():
        pinball_mean = np.nanmean(losses, axis=0).transpose(1, 0, 2)

    cov = np.empty((n_methods, 24, 2))
    kup_p = np.empty((n_methods, 24, 2))
    kup_rej = np.empty((n_methods, 24, 2), dtype=bool)
    pct_list = list(np.round(percentiles, 10))
    for j, lvl in enumerate(COVERAGE_LEVELS):
        try:
            col = pct_list.index(round(lvl, 10))
        except ValueError:
            raise ValueError(f"coverage level {lvl} not on percentile grid")
        q_col = curves[:, :, :, col]  # [day, 24, method]
        with np.errstate(invalid="ignore"):
            hits = actuals[:, :, None] < q_col
        present = np.isfinite(q_col)
        for m in range(n_methods):
            for h in range(24):
                n_ok = int(present[:, h, m].sum())
                x = int(hits[present[:, h, m], h, m].sum())
                cov[m, h, j] = x / n_ok if n_ok else np.nan
                if n_ok:
                    res = kupiec_test(x, n_ok, lvl, sig=sig)
                    kup_p[m, h, j] = res.p_value
                    kup_rej[m, h, j] = res.reject
                else:
                    kup_p[m, h, j] = np.nan
                    kup_rej[m, h, j] = False

    # DM comparisons on per-day series averaged over the other axis
    with warnings_ignore_all_nan():
        by_hour = np.nanmean(losses, axis=3)  # [day, hour, method]
        by_pct = np.nanmean(losses, axis=1)  # [day, method, pct]
    dm_hour = np.full((n_methods, n_methods, 24), np.nan)
    dm_pct = np.full((n_methods, n_methods, n_pct), np.nan)

    def dm_p(series_b, series_a):
        # p-value for "a significantly worse than b"; NaN days dropped pairwise
        ok = np.isfinite(series_a) & np.isfinite(series_b)
        if ok.sum() < 30:
            return np.nan
        return dm_test(series_b[ok], series_a[ok], sig=sig).p_value

    if n_days >= 30:
        for a in range(n_methods):
            for b in range(n_methods):
                if a == b:
                    continue
                for h in range(24):
                    dm_hour[a, b, h] = dm_p(by_hour[:, h, b], by_hour[:, h, a])
                for p in range(n_pct):
                    dm_pct[a, b, p] = dm_p(by_pct[:, b, p], by_pct[:, a, p])
    return EvaluationReport(methods=list(methods),
                            percentiles=np.asarray(percentiles, dtype=float),
                            pinball=pinball_mean, coverage=cov,
                            kupiec_p=kup_p, kupiec_reject=kup_rej,
                            dm_p_by_hour=dm_hour, dm_p_by_pct=dm_pct, sig=sig)
