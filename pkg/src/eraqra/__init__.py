"""Probabilistic day-ahead electricity price forecasting.

Builds predictive distributions of hourly prices by averaging a pool of
autoregressive point forecasts with per-level quantile or expectile
regressions, plus historical-simulation benchmarks, and evaluates them
with proper scoring rules and coverage tests.
"""

__version__ = "0.1.0"

from .errors import (
    EraqraError,
    IngestionError,
    RangeError,
    HistoryError,
    DegenerateWindowError,
    ConvergenceError,
    InvalidDistributionError,
    ConversionError,
    BacktestAbortError,
    IncompleteReportError,
)
from .timeseries import (
    EXOG_VARS,
    DAY_TYPES,
    HourlyPanel,
    CalendarDummies,
    WindowSpec,
    load_panel,
    load_holidays,
    calendar_dummies,
    slice_window,
)
from .solvers import (
    WeightVector,
    ols_fit,
    expectile_fit,
    quantile_fit,
    expectile_loss,
    quantile_loss,
    sample_expectile,
)
from .transform import (
    NormalizationStats,
    McConfig,
    window_stats,
    asinh_transform,
    sinh_invert,
    invert_distribution,
)
from .distribution import (
    LevelGrid,
    ExpectileCurve,
    QuantileCurve,
    DistributionApproximation,
    repair_crossing,
    historical_sim_quantiles,
    historical_sim_expectiles,
    recover_distribution,
    expectiles_to_quantiles,
    h_level,
)
from .arx import (
    ModelSpec,
    ALL_MODELS,
    PointForecastMatrix,
    SpikeClipConfig,
    spike_clip_config,
    clip_spikes,
    build_design,
    fit_and_forecast,
    forecast_pool,
)
from .averaging import AveragingFit, fit_qra, fit_era, predict
from .evaluation import (
    EvaluationReport,
    KupiecResult,
    DmResult,
    pinball,
    coverage,
    kupiec_test,
    dm_test,
    aggregate_report,
)
from .backtest import (
    ALL_METHODS,
    BacktestConfig,
    ForecastRecord,
    ForecastRecordSet,
    generate_windows,
    run_backtest,
)
from .synth import SynthSpec, generate_panel, write_dataset

__all__ = [name for name in dir() if not name.startswith("_")]
