"""Curves, historical simulation, expectile-quantile conversion, h-function."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eraqra import (
    ConversionError,
    DistributionApproximation,
    ExpectileCurve,
    InvalidDistributionError,
    LevelGrid,
    QuantileCurve,
    expectiles_to_quantiles,
    h_level,
    historical_sim_expectiles,
    historical_sim_quantiles,
    repair_crossing,
)
from eraqra.distribution import recover_distribution


def uniform_expectile(tau):
    """Closed-form expectile of Uniform(0,1): sqrt(tau)/(sqrt(tau)+sqrt(1-tau))."""
    return np.sqrt(tau) / (np.sqrt(tau) + np.sqrt(1.0 - tau))


class TestLevelGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            LevelGrid(np.array([0.0, 0.5]))
        with pytest.raises(ValueError):
            LevelGrid(np.array([0.5, 0.5]))

    def test_default_grids(self):
        pct = LevelGrid.percentiles()
        assert len(pct) == 99 and pct.levels[0] == 0.01
        exp = LevelGrid.expectile_default()
        assert len(exp) == 59
        assert exp.levels[0] == 0.001 and exp.levels[-1] == 0.999
        assert 0.5 in exp.levels and 0.02 in exp.levels

    def test_index_of(self):
        grid = LevelGrid.percentiles()
        assert grid.index_of(0.5) == 49
        with pytest.raises(KeyError):
            grid.index_of(0.505)


class TestCurves:
    def test_length_check(self):
        with pytest.raises(ValueError, match="length"):
            QuantileCurve(grid=LevelGrid.percentiles(), values=np.ones(5))

    def test_monotone_and_value_at(self):
        grid = LevelGrid(np.array([0.1, 0.5, 0.9]))
        curve = ExpectileCurve(grid=grid, values=np.array([1.0, 2.0, 3.0]))
        assert curve.is_monotone
        assert curve.value_at(0.5) == 2.0


class TestRepairCrossing:
    def test_sorted_unchanged(self):
        v = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(repair_crossing(v), v)

    def test_sorts(self):
        np.testing.assert_array_equal(repair_crossing(np.array([3.0, 1.0, 2.0])),
                                      [1.0, 2.0, 3.0])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    @settings(max_examples=200, deadline=None)
    def test_idempotent_and_multiset_preserving(self, vals):
        v = np.asarray(vals)
        once = repair_crossing(v)
        np.testing.assert_array_equal(repair_crossing(once), once)
        np.testing.assert_array_equal(np.sort(v), once)


class TestHistoricalSim:
    grid = LevelGrid.percentiles()

    def test_zero_residuals_flat(self):
        q = historical_sim_quantiles(42.0, np.zeros(100), self.grid)
        np.testing.assert_allclose(q.values, 42.0)
        e = historical_sim_expectiles(42.0, np.zeros(100),
                                      LevelGrid.expectile_default())
        np.testing.assert_allclose(e.values, 42.0)

    def test_symmetric_residuals_median(self):
        errors = np.array([-1.0, 1.0] * 500)
        q = historical_sim_quantiles(10.0, errors, self.grid)
        assert q.value_at(0.5) == pytest.approx(10.0)

    def test_normal_residuals_upper_quantile(self):
        rng = np.random.default_rng(0)
        errors = rng.normal(size=10000)
        q = historical_sim_quantiles(5.0, errors, self.grid)
        assert q.value_at(0.95) == pytest.approx(5.0 + 1.645, abs=0.05)

    def test_sign_convention(self):
        # positive error = forecast above actual, so mass shifts downward
        errors = np.full(50, 2.0)
        q = historical_sim_quantiles(10.0, errors, self.grid)
        np.testing.assert_allclose(q.values, 8.0)

    def test_expectile_center_and_two_point(self):
        errors = np.array([0.0, -1.0] * 200)  # negated: {0, 1}, mean 0.5
        grid = LevelGrid(np.linspace(0.05, 0.95, 19))
        e = historical_sim_expectiles(3.0, errors, grid)
        assert e.value_at(0.5) == pytest.approx(3.5, abs=1e-9)
        for tau in (0.15, 0.85):
            assert e.value_at(tau) == pytest.approx(3.0 + tau, abs=1e-9)

    def test_empty_sample(self):
        with pytest.raises(ValueError, match="empty"):
            historical_sim_quantiles(1.0, np.array([]), self.grid)


class TestDistributionApproximation:
    def test_from_masses_and_moments(self):
        x = np.array([0.0, 1.0, 2.0])
        p = np.array([0.2, 0.5, 0.3])
        dist = DistributionApproximation.from_masses(x, p)
        np.testing.assert_allclose(dist.cdf, [0.2, 0.7, 1.0])
        assert dist.mean == pytest.approx(1.1)
        np.testing.assert_allclose(dist.masses, p)

    def test_quantile_interpolation(self):
        dist = DistributionApproximation.from_masses(
            np.array([0.0, 1.0]), np.array([0.5, 0.5]))
        assert dist.quantile(0.5) == 0.0
        assert dist.quantile(0.75) == pytest.approx(0.5)

    def test_expectile_of_two_point(self):
        dist = DistributionApproximation.from_masses(
            np.array([0.0, 1.0]), np.array([0.5, 0.5]))
        assert dist.expectile(0.3) == pytest.approx(0.3, abs=1e-10)

    def test_monotonicity_enforced(self):
        with pytest.raises(InvalidDistributionError):
            DistributionApproximation(x=np.array([1.0, 0.0]),
                                      cdf=np.array([0.5, 1.0]),
                                      partial_moment=np.array([0.5, 0.5]))


class TestConversion:
    exp_grid = LevelGrid.expectile_default()
    target = LevelGrid(np.round(np.arange(0.05, 0.951, 0.05), 10))

    def test_flat_curve_short_circuits(self):
        curve = ExpectileCurve(grid=self.exp_grid, values=np.full(59, 7.0))
        q = expectiles_to_quantiles(curve, self.target)
        np.testing.assert_allclose(q.values, 7.0)

    def test_uniform_oracle(self):
        values = uniform_expectile(self.exp_grid.levels)
        curve = ExpectileCurve(grid=self.exp_grid, values=values)
        for refine in (False, True):
            q = expectiles_to_quantiles(curve, self.target, refine=refine)
            err = np.abs(q.values - self.target.levels)
            assert np.max(err) < 0.02, f"refine={refine}: {np.max(err)}"

    def test_uniform_spot_value(self):
        # frozen closed-form check of the oracle itself
        assert uniform_expectile(0.25) == pytest.approx(0.36603, abs=5e-6)

    def test_normal_sampled_oracle(self):
        rng = np.random.default_rng(1)
        sample = rng.normal(size=50000)
        from eraqra import sample_expectile
        values = np.array([sample_expectile(sample, t)
                           for t in self.exp_grid.levels])
        curve = ExpectileCurve(grid=self.exp_grid,
                               values=repair_crossing(values))
        q = expectiles_to_quantiles(curve, LevelGrid(np.array([0.05, 0.95])),
                                    refine=False)
        assert q.values[0] == pytest.approx(-1.645, abs=0.1)
        assert q.values[1] == pytest.approx(1.645, abs=0.1)

    def test_recovered_distribution_mass_and_mean(self):
        values = uniform_expectile(self.exp_grid.levels)
        curve = ExpectileCurve(grid=self.exp_grid, values=values)
        dist = recover_distribution(curve, refine=False)
        assert dist.cdf[-1] == pytest.approx(1.0, abs=1e-6)
        assert dist.mean == pytest.approx(0.5, abs=0.01)

    def test_non_monotone_rejected(self):
        values = uniform_expectile(self.exp_grid.levels)
        values[30] = values[10]
        with pytest.raises(InvalidDistributionError):
            expectiles_to_quantiles(
                ExpectileCurve(grid=self.exp_grid, values=values), self.target)

    def test_too_few_grid_points(self):
        grid = LevelGrid(np.linspace(0.1, 0.9, 9))
        curve = ExpectileCurve(grid=grid, values=np.linspace(0, 1, 9))
        with pytest.raises(ConversionError, match="10"):
            expectiles_to_quantiles(curve, self.target)

    def test_output_monotone_on_random_curves(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            values = np.sort(rng.normal(scale=rng.uniform(0.1, 10), size=59))
            curve = ExpectileCurve(grid=self.exp_grid, values=values)
            q = expectiles_to_quantiles(curve, self.target, refine=False)
            assert np.all(np.diff(q.values) >= 0)


class TestHLevel:
    def test_uniform_quarter_exact(self):
        # continuous Uniform(0,1): q=0.25, G(0.25)=0.03125, mean=0.5
        x = np.linspace(0.0, 1.0, 100001)
        dx = x[1] - x[0]
        cdf = x
        partial = np.concatenate([[0.0], np.cumsum((x[1:] + x[:-1]) / 2 * dx)])
        dist = DistributionApproximation(x=x, cdf=cdf, partial_moment=partial)
        assert h_level(0.25, dist) == pytest.approx(0.1, abs=1e-9)

    def test_symmetric_half(self):
        x = np.linspace(-1.0, 1.0, 100001)
        cdf = (x + 1.0) / 2.0
        dx = x[1] - x[0]
        partial = np.concatenate([[0.0], np.cumsum((x[1:] + x[:-1]) / 4 * dx)])
        dist = DistributionApproximation(x=x, cdf=cdf, partial_moment=partial)
        assert h_level(0.5, dist) == pytest.approx(0.5, abs=1e-9)

    def test_consistency_e_h_alpha_is_quantile(self):
        # e_{h(alpha)} = q_alpha on a sampled (discrete) distribution
        rng = np.random.default_rng(3)
        sample = np.sort(rng.normal(size=4000))
        dist = DistributionApproximation.from_masses(
            sample, np.full(4000, 1.0 / 4000))
        for alpha in (0.1, 0.25, 0.5, 0.75, 0.9):
            tau = h_level(alpha, dist)
            assert 0.0 < tau < 1.0
            assert dist.expectile(tau) == pytest.approx(dist.quantile(alpha),
                                                        abs=0.02)

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(4)
        sample = np.sort(rng.gamma(2.0, size=2000))
        dist = DistributionApproximation.from_masses(
            sample, np.full(2000, 1.0 / 2000))
        hs = [h_level(a, dist) for a in np.linspace(0.05, 0.95, 19)]
        assert np.all(np.diff(hs) > 0)

    def test_alpha_validation(self):
        dist = DistributionApproximation.from_masses(
            np.array([0.0, 1.0]), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            h_level(1.5, dist)
