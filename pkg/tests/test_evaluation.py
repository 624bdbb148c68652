"""Pinball loss, coverage, Kupiec and Diebold-Mariano tests, aggregation."""

import numpy as np
import pytest
from scipy.stats import chi2

from eraqra import (
    IncompleteReportError,
    aggregate_report,
    coverage,
    dm_test,
    kupiec_test,
    pinball,
)


class TestPinball:
    def test_perfect_forecast_zero(self):
        assert pinball(10.0, 10.0, 0.3) == 0.0

    def test_worked_examples(self):
        # under-forecast: alpha * (actual - q)
        assert pinball(10.0, 12.0, 0.5) == pytest.approx(1.0)
        # over-forecast at a high level is penalised lightly
        assert pinball(12.0, 10.0, 0.95) == pytest.approx(0.1)
        assert pinball(12.0, 10.0, 0.05) == pytest.approx(1.9)

    def test_median_is_half_absolute_error(self):
        rng = np.random.default_rng(0)
        q = rng.normal(size=50)
        a = rng.normal(size=50)
        np.testing.assert_allclose(pinball(q, a, 0.5), 0.5 * np.abs(a - q))

    def test_sample_quantile_minimizes(self):
        rng = np.random.default_rng(1)
        sample = rng.gamma(2.0, size=2001)
        for alpha in (0.1, 0.5, 0.9):
            q = np.quantile(sample, alpha)
            best = pinball(q, sample, alpha).mean()
            for shift in (-0.5, -0.05, 0.05, 0.5):
                assert best <= pinball(q + shift, sample, alpha).mean() + 1e-12

    def test_alpha_validation(self):
        with pytest.raises(ValueError, match="alpha"):
            pinball(1.0, 1.0, 0.0)


class TestCoverage:
    def test_strict_inequality(self):
        # actual equal to the quantile does not count as covered
        assert coverage(np.array([5.0, 5.0]), np.array([5.0, 4.0])) == 0.5

    def test_fraction(self):
        q = np.array([1.0, 2.0, 3.0, 4.0])
        a = np.array([0.5, 2.5, 2.0, 5.0])
        assert coverage(q, a) == pytest.approx(0.5)

    def test_shape_check(self):
        with pytest.raises(ValueError, match="shapes"):
            coverage(np.ones(3), np.ones(4))


class TestKupiec:
    def test_exact_rate_zero_statistic(self):
        res = kupiec_test(hits=50, n=1000, alpha=0.05)
        assert res.statistic == pytest.approx(0.0, abs=1e-12)
        assert res.p_value == pytest.approx(1.0)
        assert not res.reject

    def test_frozen_examples_two_years(self):
        # 730 days at the 5% level: 55 exceedances reject, 37 do not

        def oracle(x, n, p):
            rate = x / n
            ll = lambda q: (n - x) * np.log(1 - q) + x * np.log(q)
            return -2.0 * (ll(p) - ll(rate))

        hi = kupiec_test(55, 730, 0.05)
        assert hi.statistic == pytest.approx(oracle(55, 730, 0.05), abs=1e-6)
        assert hi.statistic == pytest.approx(8.600261, abs=1e-5)
        assert hi.statistic > 3.841 and hi.reject
        lo = kupiec_test(37, 730, 0.05)
        assert lo.statistic == pytest.approx(oracle(37, 730, 0.05), abs=1e-6)
        assert lo.statistic == pytest.approx(0.0071788, abs=1e-6)
        assert not lo.reject

    def test_boundary_counts(self):
        # 0*log(0) convention keeps the statistic finite at x=0 and x=n
        zero = kupiec_test(0, 100, 0.05)
        assert zero.statistic == pytest.approx(-2 * 100 * np.log(0.95))
        full = kupiec_test(100, 100, 0.05)
        assert np.isfinite(full.statistic) and full.reject

    def test_monotone_away_from_nominal(self):
        n, alpha = 500, 0.05
        stats_up = [kupiec_test(x, n, alpha).statistic for x in range(25, 60)]
        assert np.all(np.diff(stats_up) > 0)
        stats_down = [kupiec_test(x, n, alpha).statistic for x in range(25, 5, -1)]
        assert np.all(np.diff(stats_down) > 0)

    def test_p_value_is_chi2_tail(self):
        res = kupiec_test(40, 730, 0.05)
        assert res.p_value == pytest.approx(chi2.sf(res.statistic, 1))

    def test_validation(self):
        with pytest.raises(ValueError):
            kupiec_test(5, 0, 0.05)
        with pytest.raises(ValueError):
            kupiec_test(-1, 10, 0.05)


class TestDmTest:
    def test_identical_series(self):
        losses = np.abs(np.random.default_rng(2).normal(size=100))
        res = dm_test(losses, losses)
        assert res.statistic == 0.0 and res.p_value == 0.5
        assert not res.a_beats_b

    def test_constant_improvement_rejects(self):
        rng = np.random.default_rng(3)
        base = np.abs(rng.normal(size=200)) + 1.0
        res = dm_test(base * 0.8 + 0.01 * rng.normal(size=200), base)
        assert res.a_beats_b and res.p_value < 1e-6

    def test_antisymmetry(self):
        rng = np.random.default_rng(4)
        a = np.abs(rng.normal(size=120))
        b = np.abs(rng.normal(size=120))
        fwd = dm_test(a, b)
        rev = dm_test(b, a)
        assert fwd.statistic == pytest.approx(-rev.statistic, abs=1e-12)
        assert fwd.p_value == pytest.approx(1.0 - rev.p_value, abs=1e-12)

    def test_zero_variance_conventions(self):
        # exactly representable offset so the difference has zero variance
        base = np.ones(50)
        better = dm_test(base - 0.25, base)
        assert better.degenerate and better.a_beats_b and better.p_value == 0.0
        worse = dm_test(base + 0.25, base)
        assert worse.degenerate and not worse.a_beats_b
        assert worse.p_value == 1.0

    def test_hac_flag_changes_variance_only(self):
        rng = np.random.default_rng(5)
        # autocorrelated differential: HAC variance should widen the test
        e = rng.normal(size=300)
        d = np.convolve(e, np.ones(5) / 5, mode="same")
        a = np.abs(rng.normal(size=300)) + d
        b = np.abs(rng.normal(size=300))
        plain = dm_test(a, b)
        hacres = dm_test(a, b, hac=True)
        assert plain.statistic != hacres.statistic
        assert np.sign(plain.statistic) == np.sign(hacres.statistic)

    def test_min_length(self):
        with pytest.raises(ValueError, match="30"):
            dm_test(np.ones(10), np.ones(10))
        with pytest.raises(ValueError, match="lengths"):
            dm_test(np.ones(40), np.ones(41))


def constant_tensor(n_days, methods, percentiles, spread=1.0):
    """Curves centred on zero actuals with a fixed symmetric spread."""
    n_pct = len(percentiles)
    base = spread * (np.asarray(percentiles) - 0.5)
    curves = np.tile(base, (n_days, 24, len(methods), 1))
    actuals = np.zeros((n_days, 24))
    return curves, actuals


class TestAggregateReport:
    methods = ["QRA", "ERA"]
    percentiles = np.array([0.05, 0.25, 0.5, 0.75, 0.95])

    def test_shapes(self):
        curves, actuals = constant_tensor(40, self.methods, self.percentiles)
        rep = aggregate_report(curves, actuals, self.methods, self.percentiles)
        assert rep.pinball.shape == (2, 24, 5)
        assert rep.coverage.shape == (2, 24, 2)
        assert rep.kupiec_p.shape == (2, 24, 2)
        assert rep.dm_p_by_hour.shape == (2, 2, 24)
        assert rep.dm_p_by_pct.shape == (2, 2, 5)
        assert rep.hourly_pinball.shape == (2, 24)
        assert rep.grand_pinball.shape == (2,)

    def test_constant_loss_aggregates(self):
        # symmetric curve around the actual: known closed-form pinball
        curves, actuals = constant_tensor(35, self.methods, self.percentiles,
                                          spread=2.0)
        rep = aggregate_report(curves, actuals, self.methods, self.percentiles)
        expected = np.array([pinball(2.0 * (a - 0.5), 0.0, a)
                             for a in self.percentiles])
        for m in range(2):
            for h in range(24):
                np.testing.assert_allclose(rep.pinball[m, h], expected)
        np.testing.assert_allclose(rep.grand_pinball, expected.mean())
        # actual always above the 5% quantile, below the 95% quantile
        np.testing.assert_allclose(rep.coverage[:, :, 0], 0.0)
        np.testing.assert_allclose(rep.coverage[:, :, 1], 1.0)

    def test_dm_detects_dominant_method(self):
        rng = np.random.default_rng(6)
        curves, actuals = constant_tensor(120, self.methods, self.percentiles,
                                          spread=2.0)
        # make method 1 (ERA) strictly tighter, so QRA is "worse"
        curves[:, :, 1, :] *= 0.5
        actuals += 0.05 * rng.normal(size=actuals.shape)
        rep = aggregate_report(curves, actuals, self.methods, self.percentiles)
        # row index = method under test; QRA significantly worse than ERA
        assert np.all(rep.dm_p_by_hour[0, 1] < 0.05)
        assert np.all(rep.dm_p_by_hour[1, 0] > 0.5)
        assert rep.dm_hour_counts[0, 1] == 24
        assert rep.dm_hour_counts[1, 0] == 0
        assert np.all(np.isnan(rep.dm_p_by_hour[0, 0]))

    def test_kupiec_columns_match_direct_test(self):
        rng = np.random.default_rng(7)
        n_days = 200
        curves, actuals = constant_tensor(n_days, ["M"], self.percentiles,
                                          spread=4.0)
        actuals += rng.normal(size=actuals.shape)
        rep = aggregate_report(curves, actuals, ["M"], self.percentiles)
        for h in (0, 13):
            for j, lvl in enumerate((0.05, 0.95)):
                col = list(self.percentiles).index(lvl)
                x = int((actuals[:, h] < curves[0, h, 0, col]).sum())
                direct = kupiec_test(x, n_days, lvl)
                assert rep.coverage[0, h, j] == pytest.approx(x / n_days)
                assert rep.kupiec_p[0, h, j] == pytest.approx(direct.p_value)

    def test_missing_cells_abort_with_list(self):
        curves, actuals = constant_tensor(40, self.methods, self.percentiles)
        curves[3, 7, 1, :] = np.nan
        with pytest.raises(IncompleteReportError) as exc:
            aggregate_report(curves, actuals, self.methods, self.percentiles)
        assert ("ERA", 7, 3) in exc.value.missing

    def test_allow_missing_skips_cells(self):
        curves, actuals = constant_tensor(60, self.methods, self.percentiles,
                                          spread=2.0)
        complete = aggregate_report(curves, actuals, self.methods,
                                    self.percentiles)
        curves[5, 7, 1, :] = np.nan
        rep = aggregate_report(curves, actuals, self.methods, self.percentiles,
                               allow_missing=True)
        # constant losses: means unchanged after dropping one day
        np.testing.assert_allclose(rep.pinball, complete.pinball)
        assert np.isfinite(rep.coverage).all()

    def test_coverage_level_must_be_on_grid(self):
        pct = np.array([0.1, 0.5, 0.9])
        curves, actuals = constant_tensor(40, ["M"], pct)
        with pytest.raises(ValueError, match="coverage level"):
            aggregate_report(curves, actuals, ["M"], pct)

    def test_shape_validation(self):
        curves, actuals = constant_tensor(40, self.methods, self.percentiles)
        with pytest.raises(ValueError, match="shape"):
            aggregate_report(curves, actuals[:, :12], self.methods,
                             self.percentiles)

    def test_round_trips(self, tmp_path):
        curves, actuals = constant_tensor(40, self.methods, self.percentiles)
        rep = aggregate_report(curves, actuals, self.methods, self.percentiles)
        frame = rep.to_frame()
        assert set(frame.columns) == {"method", "hour", "percentile",
                                      "metric", "value"}
        pb = frame[(frame.method == "QRA") & (frame.hour == 3)
                   & (frame.metric == "pinball")]
        np.testing.assert_allclose(pb["value"].values, rep.pinball[0, 3])
        rep.to_json(tmp_path / "rep.json")
        import json
        loaded = json.loads((tmp_path / "rep.json").read_text())
        assert loaded["methods"] == self.methods
        np.testing.assert_allclose(loaded["grand_pinball"]["ERA"],
                                   rep.grand_pinball[1])
