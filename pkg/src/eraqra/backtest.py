"""Rolling-window orchestration of the full forecasting pipeline.

For every validation day the pipeline: transforms prices with stats from
the window preceding each forecasted day, produces the five ARX point
forecasts for every averaging-calibration day and the target day, fits the
probabilistic methods, converts expectile output to quantiles, inverts the
transform by Monte Carlo, and scores everything.

Every day-ahead point forecast of day d is estimated on the
calibration-length window ending at d-1, so forecasts for overlapping
calibration days are identical across rolling steps and can be cached.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .arx import ALL_MODELS, LAG_DAYS, PointForecastMatrix, fit_and_forecast
from .averaging import fit_era, fit_qra, predict
from .distribution import (ExpectileCurve, LevelGrid, QuantileCurve,
                           expectiles_to_quantiles, historical_sim_expectiles,
                           historical_sim_quantiles)
from .errors import BacktestAbortError, EraqraError, RangeError
from .evaluation import EvaluationReport, aggregate_report
from .timeseries import HourlyPanel, WindowSpec
from .transform import McConfig, NormalizationStats, invert_distribution

HIST_MODELS = ("1", "2", "3", "4", "5")
ALL_METHODS = ("QRA", "ERA") + tuple(f"Q-hist-{m}" for m in HIST_MODELS) \
    + tuple(f"EX-hist-{m}" for m in HIST_MODELS)


@dataclass(frozen=True)
class BacktestConfig:
    validation_start: pd.Timestamp
    validation_end: pd.Timestamp
    calibration_part1_days: int = 365
    calibration_part2_days: int = 365
    methods: tuple[str, ...] = ALL_METHODS
    transform: str = "asinh"
    quantile_grid: LevelGrid = field(default_factory=LevelGrid.percentiles)
    expectile_grid: LevelGrid = field(default_factory=LevelGrid.expectile_default)
    mc: McConfig = field(default_factory=McConfig)
    seed: int = 0
    jobs: int = 1
    qra_solver: str = "lp"
    conversion_refine: bool = True
    use_cache: bool = True
    error_budget: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "validation_start",
                           pd.Timestamp(self.validation_start))
        object.__setattr__(self, "validation_end",
                           pd.Timestamp(self.validation_end))
        if self.validation_end < self.validation_start:
            raise ValueError("validation range is empty")
        if self.calibration_part1_days < 8 or self.calibration_part2_days < 8:
            raise ValueError("calibration parts must be at least 8 days "
                             "(7 lags + 1 response row)")
        if self.transform not in ("asinh", "none"):
            raise ValueError(f"unknown transform {self.transform!r}")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")


@dataclass(frozen=True)
class ForecastRecord:
    date: pd.Timestamp
    hour: int
    method: str
    curve: QuantileCurve
    actual: float


@dataclass
class ForecastRecordSet:
    """Stacked price-scale quantile forecasts for every (day, hour, method)."""

    dates: pd.DatetimeIndex
    methods: list[str]
    grid: LevelGrid
    curves: np.ndarray  # [day, 24, method, level]
    actuals: np.ndarray  # [day, 24]
    failures: list = field(default_factory=list)

    def __iter__(self):
        for d, date in enumerate(self.dates):
            for h in range(24):
                for m, method in enumerate(self.methods):
                    yield ForecastRecord(date=date, hour=h, method=method,
                                         curve=QuantileCurve(
                                             grid=self.grid,
                                             values=self.curves[d, h, m]),
                                         actual=float(self.actuals[d, h]))

    def to_frame(self) -> pd.DataFrame:
        d_n, h_n, m_n, l_n = self.curves.shape
        date_col = np.repeat(self.dates.values, h_n * m_n * l_n)
        hour_col = np.tile(np.repeat(np.arange(h_n), m_n * l_n), d_n)
        method_col = np.tile(np.repeat(np.array(self.methods, dtype=object), l_n),
                             d_n * h_n)
        level_col = np.tile(self.grid.levels, d_n * h_n * m_n)
        actual_col = np.repeat(self.actuals.ravel(), m_n * l_n)
        return pd.DataFrame({
            "date": pd.DatetimeIndex(date_col).date,
            "hour": hour_col,
            "method": method_col,
            "level": level_col,
            "value": self.curves.ravel(),
            "actual": actual_col,
        })

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path) -> "ForecastRecordSet":
        frame = pd.read_csv(path, float_precision="round_trip")
        required = {"date", "hour", "method", "level", "value", "actual"}
        if not required.issubset(frame.columns):
            raise EraqraError(f"record file missing columns "
                              f"{sorted(required - set(frame.columns))}")
        dates = pd.DatetimeIndex(sorted(pd.to_datetime(frame["date"]).unique()))
        methods = list(dict.fromkeys(frame["method"]))
        levels = np.array(sorted(frame["level"].unique()))
        grid = LevelGrid(levels)
        d_ix = {d: i for i, d in enumerate(dates)}
        m_ix = {m: i for i, m in enumerate(methods)}
        l_ix = {lv: i for i, lv in enumerate(levels)}
        curves = np.full((len(dates), 24, len(methods), len(levels)), np.nan)
        actuals = np.full((len(dates), 24), np.nan)
        di = pd.to_datetime(frame["date"]).map(d_ix).values
        hi = frame["hour"].values.astype(int)
        mi = frame["method"].map(m_ix).values
        li = frame["level"].map(l_ix).values
        curves[di, hi, mi, li] = frame["value"].values
        actuals[di, hi] = frame["actual"].values
        if np.isnan(actuals).any():
            d, h = np.argwhere(np.isnan(actuals))[0]
            raise EraqraError(f"record file has no rows for "
                              f"{dates[d].date()} hour {h}")
        return cls(dates=dates, methods=methods, grid=grid,
                   curves=curves, actuals=actuals)

    def evaluate(self, sig: float = 0.05,
                 allow_missing: bool = False) -> EvaluationReport:
        return aggregate_report(self.curves, self.actuals, self.methods,
                                self.grid.levels, sig=sig,
                                allow_missing=allow_missing)


def generate_windows(cfg: BacktestConfig, panel: HourlyPanel) -> list[WindowSpec]:
    """One WindowSpec per validation day, advancing one day per step."""
    days = pd.date_range(cfg.validation_start, cfg.validation_end, freq="D")
    windows = []
    for target in days:
        end = target - pd.Timedelta(days=1)
        split = end - pd.Timedelta(days=cfg.calibration_part2_days - 1)
        start = split - pd.Timedelta(days=cfg.calibration_part1_days)
        spec = WindowSpec(start, split, end, target)
        # the asinh stats for the earliest part-2 day reach a full two-part
        # window further back than the lagged regressors do
        if cfg.transform == "asinh":
            full = cfg.calibration_part1_days + cfg.calibration_part2_days
            first_needed = split - pd.Timedelta(days=full)
        else:
            first_needed = start - pd.Timedelta(days=LAG_DAYS)
        if first_needed < panel.dates[0] or target > panel.dates[-1]:
            raise RangeError(
                f"window for {target.date()} needs data "
                f"[{first_needed.date()}, {target.date()}] outside panel "
                f"[{panel.dates[0].date()}, {panel.dates[-1].date()}]")
        windows.append(spec)
    return windows


def _sub_seed(seed: int, day_idx: int, hour: int, method_idx: int) -> int:
    return int(np.random.SeedSequence(
        entropy=(seed, day_idx, hour, method_idx)).generate_state(1)[0])


class _Engine:
    """Per-run state: panel, config, and the day-ahead forecast cache."""

    def __init__(self, panel: HourlyPanel, cfg: BacktestConfig):
        self.panel = panel
        self.cfg = cfg
        self.cache: dict = {}
        self.est_len = cfg.calibration_part1_days
        self.full_len = cfg.calibration_part1_days + cfg.calibration_part2_days

    def _day_stats(self, d_row: int) -> np.ndarray:
        """Per-hour (mu, sigma) over the full calibration window before d."""
        block = self.panel.prices[d_row - self.full_len:d_row]
        mu = block.mean(axis=0)
        sigma = block.std(axis=0, ddof=1)
        return np.stack([mu, sigma])

    def day_forecasts(self, d_row: int, hour: int):
        """(pool forecasts (K,), working-scale actual, stats) for one day.

        Working scale is the asinh transform under the stats of the
        calibration window preceding day d, or raw prices.
        """
        key = (d_row, hour)
        if self.cfg.use_cache and key in self.cache:
            return self.cache[key]
        panel = self.panel
        lo = d_row - self.est_len - LAG_DAYS
        if self.cfg.transform == "asinh":
            ms = self._day_stats(d_row)
            stats = NormalizationStats(mu=float(ms[0, hour]),
                                       sigma=float(ms[1, hour]))
            work = np.arcsinh((panel.prices[lo:d_row + 1] - ms[0]) / ms[1])
        else:
            stats = None
            work = panel.prices[lo:d_row + 1]
        sub = panel.view(lo, d_row + 1)
        # fit_and_forecast reads only part1_days (estimation length) and
        # target_day from the spec; split/end just satisfy the ordering.
        target = panel.dates[d_row]
        end = target - pd.Timedelta(days=1)
        split = end - pd.Timedelta(days=1)
        window = WindowSpec(split - pd.Timedelta(days=self.est_len), split,
                            end, target)
        forecasts = np.array([
            fit_and_forecast(sub, window, hour, spec, prices=work)
            for spec in ALL_MODELS])
        actual = float(work[-1, hour])
        result = (forecasts, actual, stats)
        if self.cfg.use_cache:
            self.cache[key] = result
        return result

    def run_cell(self, window: WindowSpec, day_idx: int, hour: int,
                 out: np.ndarray, failures: list):
        """All methods for one (day, hour); writes into out[method, level]."""
        cfg = self.cfg
        panel = self.panel
        try:
            target_row = panel.row_of(window.target_day)
            split_row = panel.row_of(window.calibration_split)
            pool_rows = range(split_row, target_row)

            pool_fc = np.empty((len(pool_rows), len(ALL_MODELS)))
            pool_act = np.empty(len(pool_rows))
            for i, d in enumerate(pool_rows):
                pool_fc[i], pool_act[i], _ = self.day_forecasts(d, hour)
            target_fc, _, target_stats = self.day_forecasts(target_row, hour)
        except EraqraError as exc:
            for method in cfg.methods:
                failures.append((window.target_day, hour, method, str(exc)))
            return
        residuals = pool_fc - pool_act[:, None]  # forecast minus actual
        pool = PointForecastMatrix(forecasts=pool_fc, actuals=pool_act,
                                   model_names=tuple(m.name for m in ALL_MODELS))

        for m_idx, method in enumerate(cfg.methods):
            try:
                curve = self._method_curve(method, pool, residuals, target_fc)
                if cfg.transform == "asinh":
                    mc = McConfig(n_scenarios=cfg.mc.n_scenarios,
                                  seed=_sub_seed(cfg.seed, day_idx, hour, m_idx))
                    curve = invert_distribution(curve, target_stats, mc,
                                                target=cfg.quantile_grid)
                out[m_idx] = curve.values
            except EraqraError as exc:
                failures.append((window.target_day, hour, method, str(exc)))

    def _method_curve(self, method: str, pool, residuals: np.ndarray,
                      target_fc: np.ndarray) -> QuantileCurve:
        cfg = self.cfg
        if method == "QRA":
            fit = fit_qra(pool, cfg.quantile_grid, solver=cfg.qra_solver)
            return predict(fit, target_fc)
        if method == "ERA":
            fit = fit_era(pool, cfg.expectile_grid)
            exp_curve = predict(fit, target_fc)
            return expectiles_to_quantiles(exp_curve, cfg.quantile_grid,
                                           refine=cfg.conversion_refine)
        kind, model = method.rsplit("-", 1)
        k = int(model) - 1
        eps = residuals[:, k]
        pf = float(target_fc[k])
        if kind == "Q-hist":
            return historical_sim_quantiles(pf, eps, cfg.quantile_grid)
        exp_curve = historical_sim_expectiles(pf, eps, cfg.expectile_grid)
        return expectiles_to_quantiles(exp_curve, cfg.quantile_grid,
                                       refine=cfg.conversion_refine)


def run_backtest(panel: HourlyPanel, cfg: BacktestConfig
                 ) -> tuple[ForecastRecordSet, EvaluationReport]:
    """Run the moving-window backtest and score the results.

    Individual (day, hour, method) failures are tolerated up to the error
    budget; the failure log is attached to the record set as ``failures``.
    """
    windows = generate_windows(cfg, panel)
    n_days = len(windows)
    n_methods = len(cfg.methods)
    n_levels = len(cfg.quantile_grid)
    curves = np.full((n_days, 24, n_methods, n_levels), np.nan)
    actuals = np.array([panel.prices[panel.row_of(w.target_day)]
                        for w in windows])
    engine = _Engine(panel, cfg)
    failures: list = []

    def run_day(day_idx: int):
        window = windows[day_idx]
        for hour in range(24):
            engine.run_cell(window, day_idx, hour, curves[day_idx, hour],
                            failures)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            list(pool.map(run_day, range(n_days)))
    else:
        for day_idx in range(n_days):
            run_day(day_idx)

    total_cells = n_days * 24 * n_methods
    if len(failures) > cfg.error_budget * total_cells:
        raise BacktestAbortError(
            f"{len(failures)} of {total_cells} cells failed "
            f"(budget {cfg.error_budget:.0%})", failures=failures)

    dates = pd.DatetimeIndex([w.target_day for w in windows])
    records = ForecastRecordSet(dates=dates, methods=list(cfg.methods),
                                grid=cfg.quantile_grid, curves=curves,
                                actuals=actuals, failures=failures)
    report = records.evaluate(allow_missing=bool(failures))
    return records, report
