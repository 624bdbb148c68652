"""Hourly electricity-market panels: ingestion, calendar features, window slicing.

A panel is a rectangular [day x 24] block of prices plus aligned exogenous
forecast blocks.  All downstream modules assume this shape, so ingestion
repairs isolated missing hours and refuses anything worse.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import IngestionError, HistoryError, RangeError

EXOG_VARS = ("gen_forecast", "wind_forecast", "solar_forecast", "load_forecast")

DEFAULT_SCHEMA = {
    "timestamp": "timestamp",
    "price": "price",
    **{name: name for name in EXOG_VARS},
}

#: day-type classes, in fixed column order
DAY_TYPES = ("monday", "saturday", "sun_holiday", "other")


@dataclass(frozen=True)
class HourlyPanel:
    """Aligned daily records of 24 hourly prices plus exogenous columns.

    Immutable after construction; slices share the underlying arrays.
    """

    dates: pd.DatetimeIndex
    prices: np.ndarray  # [day, 24], EUR/MWh
    exogenous: dict[str, np.ndarray]  # name -> [day, 24]
    holiday_flags: np.ndarray  # [day], bool

    def __post_init__(self):
        n = len(self.dates)
        if self.prices.shape != (n, 24):
            raise IngestionError(
                f"price matrix shape {self.prices.shape} != ({n}, 24)"
            )
        for name, mat in self.exogenous.items():
            if mat.shape != (n, 24):
                raise IngestionError(
                    f"exogenous '{name}' shape {mat.shape} != ({n}, 24)"
                )
        if self.holiday_flags.shape != (n,):
            raise IngestionError("holiday_flags length mismatch")
        deltas = np.diff(self.dates.values.astype("datetime64[D]").astype(int))
        if n > 1 and not np.all(deltas == 1):
            raise IngestionError("dates must be strictly increasing with no gaps")
        if not np.all(np.isfinite(self.prices)):
            raise IngestionError("non-finite price entries")

    @property
    def n_days(self) -> int:
        return len(self.dates)

    def row_of(self, date) -> int:
        """Index of a calendar date; RangeError if outside the panel."""
        ts = pd.Timestamp(date)
        idx = self.dates.get_indexer([ts])
        if idx[0] < 0:
            raise RangeError(f"date {ts.date()} outside panel range "
                             f"[{self.dates[0].date()}, {self.dates[-1].date()}]")
        return int(idx[0])

    def view(self, start_row: int, end_row: int) -> "HourlyPanel":
        """Contiguous sub-panel covering rows [start_row, end_row)."""
        if start_row < 0 or end_row > self.n_days or start_row >= end_row:
            raise RangeError(f"invalid row slice [{start_row}, {end_row})")
        return HourlyPanel(
            dates=self.dates[start_row:end_row],
            prices=self.prices[start_row:end_row],
            exogenous={k: v[start_row:end_row] for k, v in self.exogenous.items()},
            holiday_flags=self.holiday_flags[start_row:end_row],
        )

    def to_csv(self, path) -> None:
        """Write back in the ingestion schema (one row per hour)."""
        n = self.n_days
        stamps = np.repeat(self.dates.values, 24) + np.tile(
            np.arange(24) * np.timedelta64(1, "h"), n
        )
        frame = pd.DataFrame({"timestamp": stamps, "price": self.prices.ravel()})
        for name in EXOG_VARS:
            frame[name] = self.exogenous[name].ravel()
        frame.to_csv(path, index=False)


@dataclass(frozen=True)
class CalendarDummies:
    """One-hot day-type flags, columns ordered as DAY_TYPES."""

    dates: pd.DatetimeIndex
    flags: np.ndarray  # [day, 4], float 0/1

    def __post_init__(self):
        if not np.allclose(self.flags.sum(axis=1), 1.0):
            raise ValueError("exactly one day-type flag must be set per day")


@dataclass(frozen=True)
class WindowSpec:
    """Calibration split and target day of one rolling step.

    Part 1 covers [calibration_start, calibration_split), part 2 covers
    [calibration_split, calibration_end]; the target day follows immediately.
    """

    calibration_start: pd.Timestamp
    calibration_split: pd.Timestamp
    calibration_end: pd.Timestamp
    target_day: pd.Timestamp

    def __post_init__(self):
        s, m, e, t = (pd.Timestamp(x) for x in (
            self.calibration_start, self.calibration_split,
            self.calibration_end, self.target_day))
        object.__setattr__(self, "calibration_start", s)
        object.__setattr__(self, "calibration_split", m)
        object.__setattr__(self, "calibration_end", e)
        object.__setattr__(self, "target_day", t)
        if not (s < m < e < t):
            raise ValueError("window dates must satisfy start < split < end < target")
        if t - e != pd.Timedelta(days=1):
            raise ValueError("target_day must be calibration_end + 1 day")

    def shifted(self, days: int) -> "WindowSpec":
        d = pd.Timedelta(days=days)
        return WindowSpec(self.calibration_start + d, self.calibration_split + d,
                          self.calibration_end + d, self.target_day + d)

    @property
    def part1_days(self) -> int:
        return (self.calibration_split - self.calibration_start).days

    @property
    def part2_days(self) -> int:
        return (self.calibration_end - self.calibration_split).days + 1


def load_holidays(path) -> set:
    """Read a holiday file: one ISO date per line, blank lines ignored."""
    days = set()
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                days.add(pd.Timestamp(dt.date.fromisoformat(text)))
            except ValueError as exc:
                raise IngestionError(
                    f"holiday file line {line_no}: bad date {text!r}") from exc
    return days


def load_panel(csv_source, schema: dict | None = None,
               holidays: set | None = None) -> HourlyPanel:
    """Load and validate an hourly CSV into a rectangular panel.

    Isolated missing hours are imputed from the same hour of the previous
    day (with a warning); a timestamp appearing exactly twice (DST
    fall-back) is averaged; anything else aborts with IngestionError.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    try:
        raw = pd.read_csv(csv_source, float_precision="round_trip")
    except Exception as exc:
        raise IngestionError(f"cannot read CSV: {exc}") from exc

    cols = [schema["timestamp"], schema["price"]] + [schema[v] for v in EXOG_VARS]
    missing_cols = [c for c in cols if c not in raw.columns]
    if missing_cols:
        raise IngestionError(f"missing columns: {missing_cols}")

    frame = raw[cols].copy()
    frame.columns = ["timestamp", "price", *EXOG_VARS]
    try:
        frame["timestamp"] = pd.to_datetime(frame["timestamp"])
    except Exception as exc:
        raise IngestionError(f"unparseable timestamp: {exc}") from exc
    frame = frame.sort_values("timestamp", kind="stable").reset_index(drop=True)

    value_cols = ["price", *EXOG_VARS]
    for col in value_cols:
        vals = pd.to_numeric(frame[col], errors="coerce")
        bad = vals.isna() & frame[col].notna()
        if bad.any():
            row = frame.loc[bad.idxmax()]
            raise IngestionError(
                f"non-numeric value in column '{col}' at {row['timestamp']}")
        frame[col] = vals

    # DST fall-back: a doubled hour is averaged; higher multiplicity is a
    # data error and aborts.
    counts = frame["timestamp"].value_counts()
    over = counts[counts > 2]
    if not over.empty:
        raise IngestionError(
            f"timestamp {over.index[0]} appears {over.iloc[0]} times")
    doubled = counts[counts == 2]
    if not doubled.empty:
        warnings.warn(
            f"averaging {len(doubled)} duplicated timestamp(s), e.g. "
            f"{doubled.index[0]}", stacklevel=2)
        frame = frame.groupby("timestamp", as_index=False)[value_cols].mean()

    frame = frame.set_index("timestamp")
    first_day = frame.index[0].normalize()
    last_day = frame.index[-1].normalize()
    full_index = pd.date_range(first_day, last_day + pd.Timedelta(hours=23),
                               freq="h")
    frame = frame.reindex(full_index)

    hole = frame["price"].isna().values.reshape(-1, 24)
    whole_days = hole.all(axis=1)
    if whole_days.any():
        day = pd.date_range(first_day, last_day, freq="D")[whole_days.argmax()]
        raise IngestionError(f"whole day {day.date()} missing")
    if hole[0].any():
        h = int(hole[0].argmax())
        raise IngestionError(f"hour {h} of first day {first_day.date()} missing; "
                             "cannot impute without a previous day")
    n_missing = int(hole.sum())
    if n_missing:
        warnings.warn(f"imputing {n_missing} missing hour(s) from the "
                      "previous day", stacklevel=2)

    dates = pd.date_range(first_day, last_day, freq="D")
    blocks = {col: frame[col].values.reshape(-1, 24).copy()
              for col in value_cols}
    if n_missing:
        for col, mat in blocks.items():
            for d, h in zip(*np.where(hole)):
                mat[d, h] = mat[d - 1, h]
            if np.isnan(mat).any():
                raise IngestionError(f"column '{col}' still has gaps after "
                                     "single-hour imputation")

    if holidays is None:
        holidays = set()
    flags = np.array([d in holidays for d in dates], dtype=bool)
    return HourlyPanel(dates=dates, prices=blocks["price"],
                       exogenous={v: blocks[v] for v in EXOG_VARS},
                       holiday_flags=flags)


def calendar_dummies(panel: HourlyPanel) -> CalendarDummies:
    """One-hot {Monday, Saturday, Sunday/Holiday, other} per day.

    A holiday maps into the Sunday/Holiday class regardless of weekday.
    """
    dow = panel.dates.dayofweek.values  # Monday=0 .. Sunday=6
    flags = np.zeros((panel.n_days, 4))
    sun_hol = (dow == 6) | panel.holiday_flags
    flags[:, 2] = sun_hol
    flags[:, 0] = (dow == 0) & ~sun_hol
    flags[:, 1] = (dow == 5) & ~sun_hol
    flags[:, 3] = 1.0 - flags[:, :3].sum(axis=1)
    return CalendarDummies(dates=panel.dates, flags=flags)


def slice_window(panel: HourlyPanel, spec: WindowSpec,
                 lag_days: int = 7) -> tuple[HourlyPanel, HourlyPanel, HourlyPanel]:
    """Split a panel into (calibration part 1, part 2, target row) views.

    Lagged regressors need `lag_days` of history before calibration_start;
    the views themselves stay disjoint and contiguous.
    """
    start = panel.row_of(spec.calibration_start)
    split = panel.row_of(spec.calibration_split)
    end = panel.row_of(spec.calibration_end)
    target = panel.row_of(spec.target_day)
    if start < lag_days:
        raise HistoryError(
            f"need {lag_days} days of history before {spec.calibration_start.date()}, "
            f"have {start}")
    return (panel.view(start, split), panel.view(split, end + 1),
            panel.view(target, target + 1))
