"""Shared fixtures: small synthetic panels and CSV builders."""

import numpy as np
import pandas as pd
import pytest

from eraqra.timeseries import EXOG_VARS, HourlyPanel


def make_panel(n_days=40, seed=0, start="2021-01-01", noise=1.0,
               base=50.0) -> HourlyPanel:
    """Random but well-behaved hourly panel for unit tests."""
    rng = np.random.default_rng(seed)
    dates = pd.date_range(start, periods=n_days, freq="D")
    hours = np.arange(24)
    daily = 8.0 * np.sin((hours - 6) * np.pi / 12)[None, :]
    prices = base + daily + rng.normal(scale=noise, size=(n_days, 24))
    exog = {name: 30.0 + 5.0 * rng.normal(size=(n_days, 24))
            for name in EXOG_VARS}
    return HourlyPanel(dates=dates, prices=prices, exogenous=exog,
                       holiday_flags=np.zeros(n_days, dtype=bool))


def panel_frame(panel: HourlyPanel) -> pd.DataFrame:
    """Long-format frame in the ingestion schema."""
    n = panel.n_days
    stamps = np.repeat(panel.dates.values, 24) + np.tile(
        np.arange(24) * np.timedelta64(1, "h"), n)
    frame = pd.DataFrame({"timestamp": stamps, "price": panel.prices.ravel()})
    for name in EXOG_VARS:
        frame[name] = panel.exogenous[name].ravel()
    return frame


@pytest.fixture
def small_panel():
    return make_panel(n_days=40, seed=0)


@pytest.fixture
def panel_csv(tmp_path, small_panel):
    path = tmp_path / "panel.csv"
    small_panel.to_csv(path)
    return path
