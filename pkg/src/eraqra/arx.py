"""The five individual ARX expert models and day-ahead point forecasting.

Each model explains the price of one hour by lagged prices, exogenous
day-ahead system forecasts, and day-type dummies.  Model 4 (p-ARX) damps
price spikes before estimation; Model 5 (m-ARX) centers lags and response
by the trailing weekly mean.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import HistoryError
from .solvers import ols_fit
from .timeseries import EXOG_VARS, HourlyPanel, WindowSpec, calendar_dummies

LAG_DAYS = 7


class ModelSpec(enum.Enum):
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"
    M4_pARX = "m4"
    M5_mARX = "m5"


ALL_MODELS = (ModelSpec.M1, ModelSpec.M2, ModelSpec.M3,
              ModelSpec.M4_pARX, ModelSpec.M5_mARX)

#: autoregressive lags per variant
_LAGS = {
    ModelSpec.M1: (1, 2, 7),
    ModelSpec.M2: tuple(range(1, 8)),
    ModelSpec.M3: tuple(range(1, 8)),
    ModelSpec.M4_pARX: (1, 2, 7),
    ModelSpec.M5_mARX: tuple(range(1, 8)),
}


@dataclass(frozen=True)
class SpikeClipConfig:
    """Upper/lower damping levels, mean +/- 3 std of the calibration window."""

    upper: float
    lower: float

    def __post_init__(self):
        if not self.upper > self.lower:
            raise ValueError("upper clip level must exceed lower")


@dataclass(frozen=True)
class PointForecastMatrix:
    """Per-hour pool of K point forecasts plus aligned actuals."""

    forecasts: np.ndarray  # [day, K]
    actuals: np.ndarray  # [day]
    model_names: tuple[str, ...]

    def __post_init__(self):
        if self.forecasts.ndim != 2 or \
                self.forecasts.shape[0] != self.actuals.shape[0]:
            raise ValueError("forecast/actual day dimensions differ")
        if self.forecasts.shape[1] != len(self.model_names):
            raise ValueError("model name count mismatch")
        if not np.all(np.isfinite(self.forecasts)):
            raise ValueError("non-finite forecasts")


def spike_clip_config(prices: np.ndarray) -> SpikeClipConfig:
    """Clip levels mu +/- 3 sigma from a calibration price sample."""
    prices = np.asarray(prices, dtype=float).ravel()
    mu = float(prices.mean())
    sigma = float(prices.std(ddof=1))
    return SpikeClipConfig(upper=mu + 3.0 * sigma, lower=mu - 3.0 * sigma)


def clip_spikes(prices: np.ndarray, cfg: SpikeClipConfig) -> np.ndarray:
    """Log-damp prices beyond the clip levels; identity in between.

    Above upper level U: U + U*log10(|P/U|); below lower level L:
    L - |L|*log10(|P/L|).  Both branches meet the identity at the boundary.
    """
    if cfg.upper == 0.0 or cfg.lower == 0.0:
        raise ValueError("clip level of zero makes the log damping undefined")
    p = np.asarray(prices, dtype=float)
    out = p.copy()
    hi = p > cfg.upper
    lo = p < cfg.lower
    with np.errstate(divide="ignore", invalid="ignore"):
        out[hi] = cfg.upper + cfg.upper * np.log10(np.abs(p[hi] / cfg.upper))
        out[lo] = cfg.lower - abs(cfg.lower) * np.log10(np.abs(p[lo] / cfg.lower))
    return out


def _regressor_rows(panel: HourlyPanel, hour: int, spec: ModelSpec,
                    rows: np.ndarray, prices: np.ndarray,
                    dummies: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Design rows and responses for the given response-day indices."""
    lags = _LAGS[spec]
    hourly = prices[:, hour]
    cols = []
    if spec is ModelSpec.M5_mARX:
        week = np.stack([hourly[rows - i] for i in range(1, 8)], axis=1)
        weekly_mean = week.mean(axis=1)
        for i in lags:
            cols.append(hourly[rows - i] - weekly_mean)
    else:
        weekly_mean = np.zeros(len(rows))
        for i in lags:
            cols.append(hourly[rows - i])
    for name in EXOG_VARS:
        cols.append(panel.exogenous[name][rows, hour])
    cols.append(dummies[rows])  # 4 columns
    if spec is ModelSpec.M3:
        cols.append(prices[rows - 1].min(axis=1))
        cols.append(prices[rows - 1].max(axis=1))
    X = np.column_stack(cols)
    y = hourly[rows] - weekly_mean
    return X, y


def build_design(panel: HourlyPanel, hour: int, spec: ModelSpec,
                 prices: np.ndarray | None = None,
                 clip_cfg: SpikeClipConfig | None = None
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Design matrix, response, and per-row weekly means for a panel slice.

    Rows cover every day with a full 7 days of in-slice history.  `prices`
    overrides the panel's price block (already-transformed values); for
    Model 4 a clip config damps spikes in both lags and response.
    """
    if not 0 <= hour <= 23:
        raise ValueError(f"hour must be 0-23, got {hour}")
    if panel.n_days <= LAG_DAYS:
        raise HistoryError(
            f"need more than {LAG_DAYS} days of data, have {panel.n_days}")
    prices = panel.prices if prices is None else np.asarray(prices, dtype=float)
    if spec is ModelSpec.M4_pARX:
        if clip_cfg is None:
            clip_cfg = spike_clip_config(prices[:, hour])
        prices = prices.copy()
        prices[:, hour] = clip_spikes(prices[:, hour], clip_cfg)
    dummies = calendar_dummies(panel).flags
    rows = np.arange(LAG_DAYS, panel.n_days)
    X, y = _regressor_rows(panel, hour, spec, rows, prices, dummies)
    if spec is ModelSpec.M5_mARX:
        hourly = prices[:, hour]
        weekly = np.stack([hourly[rows - i] for i in range(1, 8)], axis=1).mean(axis=1)
    else:
        weekly = np.zeros(len(rows))
    return X, y, weekly


def fit_and_forecast(panel: HourlyPanel, window: WindowSpec, hour: int,
                     spec: ModelSpec,
                     prices: np.ndarray | None = None) -> float:
    """Day-ahead point forecast for the window's target day.

    Coefficients are estimated by OLS on the calibration-length window
    immediately preceding the target day; Model 4's clip statistics come
    from the same window.  For Model 5 the weekly mean is added back.
    """
    est_len = window.part1_days
    target_row = panel.row_of(window.target_day)
    est_start = target_row - est_len
    if est_start < LAG_DAYS:
        raise HistoryError(
            f"need {LAG_DAYS} lag days before the estimation window of "
            f"{window.target_day.date()}")
    prices_full = panel.prices if prices is None else np.asarray(prices, dtype=float)

    clip_cfg = None
    if spec is ModelSpec.M4_pARX:
        clip_cfg = spike_clip_config(prices_full[est_start:target_row, hour])

    est_panel = panel.view(est_start - LAG_DAYS, target_row)
    X, y, _ = build_design(est_panel, hour, spec,
                           prices=prices_full[est_start - LAG_DAYS:target_row],
                           clip_cfg=clip_cfg)
    # M5's seven demeaned lag columns sum to zero by construction, so its
    # design is rank-deficient by exactly one; the min-norm fit is fine.
    expected = X.shape[1] - 1 if spec is ModelSpec.M5_mARX else X.shape[1]
    coef = ols_fit(X, y, expected_rank=expected)

    work = prices_full
    if spec is ModelSpec.M4_pARX:
        work = prices_full.copy()
        work[:, hour] = clip_spikes(work[:, hour], clip_cfg)
    dummies = calendar_dummies(panel).flags
    rows = np.array([target_row])
    x_t, _ = _regressor_rows(panel, hour, spec, rows, work, dummies)
    forecast = float(x_t[0] @ coef)
    if spec is ModelSpec.M5_mARX:
        hourly = work[:, hour]
        forecast += float(hourly[target_row - 7:target_row].mean())
    return forecast


def forecast_pool(panel: HourlyPanel, windows, hour: int,
                  models=ALL_MODELS,
                  prices: np.ndarray | None = None) -> PointForecastMatrix:
    """Run every model over a chronological window sequence and stack results."""
    forecasts = np.empty((len(windows), len(models)))
    actuals = np.empty(len(windows))
    price_block = panel.prices if prices is None else np.asarray(prices, dtype=float)
    for i, window in enumerate(windows):
        row = panel.row_of(window.target_day)
        actuals[i] = price_block[row, hour]
        for j, spec in enumerate(models):
            forecasts[i, j] = fit_and_forecast(panel, window, hour, spec,
                                               prices=prices)
    return PointForecastMatrix(forecasts=forecasts, actuals=actuals,
                               model_names=tuple(m.name for m in models))
