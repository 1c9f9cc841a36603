import numpy as np
import pytest

from dayahead.core import (
    EPS,
    DayMatrix,
    GeometryError,
    InsufficientDataError,
    MultiSeries,
    NormStats,
    ParameterError,
    apply_norm,
    compute_norm_stats,
    denorm,
    split_days,
)

from conftest import make_series


class TestNormStats:
    def test_simple_univariate(self):
        stats = compute_norm_stats(make_series([1.0, 2.0, 3.0]))
        # population std = sqrt(((1-2)^2 + 0^2 + (3-2)^2) / 3)
        expected_std = np.sqrt(((1 - 2) ** 2 + 0 + (3 - 2) ** 2) / 3)
        assert stats.mean[0] == pytest.approx(2.0)
        assert stats.std[0] == pytest.approx(expected_std)
        assert stats.std[0] == pytest.approx(0.8165, abs=1e-4)

    def test_constant_series_has_zero_std(self):
        stats = compute_norm_stats(make_series([5.0, 5.0, 5.0]))
        assert stats.mean[0] == 5.0
        assert stats.std[0] == 0.0

    def test_two_dimensions_independent(self):
        stats = compute_norm_stats(make_series([[0.0, 10.0], [2.0, 10.0]]))
        np.testing.assert_allclose(stats.mean, [1.0, 10.0])
        np.testing.assert_allclose(stats.std, [1.0, 0.0])

    def test_negative_std_rejected(self):
        with pytest.raises(ParameterError):
            NormStats(mean=np.zeros(2), std=np.array([1.0, -0.5]))


class TestApplyDenorm:
    def test_known_values(self):
        series = make_series([1.0, 2.0, 3.0])
        stats = compute_norm_stats(series)
        out = apply_norm(series, stats)
        expected = (np.array([1.0, 2.0, 3.0]) - 2.0) / np.sqrt(2.0 / 3.0)
        np.testing.assert_allclose(out.values[:, 0], expected)
        np.testing.assert_allclose(out.values[:, 0], [-1.2247, 0.0, 1.2247], atol=1e-4)

    def test_zero_variance_maps_to_zero(self):
        series = make_series([5.0, 5.0])
        stats = compute_norm_stats(series)
        out = apply_norm(series, stats)
        np.testing.assert_array_equal(out.values, np.zeros((2, 1)))

    def test_round_trip(self):
        series = make_series([1.0, 2.0, 3.0])
        stats = compute_norm_stats(series)
        back = denorm(apply_norm(series, stats), stats)
        np.testing.assert_allclose(back.values, series.values, atol=1e-9)

    def test_denorm_zero_variance(self):
        stats = NormStats(mean=np.array([5.0]), std=np.array([0.0]))
        out = denorm(make_series([0.0, 0.0]), stats)
        np.testing.assert_allclose(out.values[:, 0], [5.0, 5.0])

    def test_denorm_identity_stats(self):
        series = make_series([[1.0, -3.0], [0.5, 4.0]])
        stats = NormStats(mean=np.zeros(2), std=np.ones(2))
        np.testing.assert_array_equal(denorm(series, stats).values, series.values)

    def test_dimension_mismatch(self):
        stats = NormStats(mean=np.zeros(3), std=np.ones(3))
        with pytest.raises(GeometryError):
            apply_norm(make_series([[1.0, 2.0]]), stats)
        with pytest.raises(GeometryError):
            denorm(make_series([[1.0, 2.0]]), stats)

    def test_normalized_series_is_standard(self, rng):
        values = rng.normal(3.0, 2.5, size=(500, 3)) * np.array([1.0, 10.0, 0.1])
        series = MultiSeries(values)
        stats = compute_norm_stats(series)
        out = apply_norm(series, stats)
        np.testing.assert_allclose(out.values.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.values.std(axis=0), 1.0, atol=1e-9)


class TestSplitDays:
    def test_exact_multiple(self):
        series = make_series(np.arange(6.0))
        days = split_days(series, 3)
        assert len(days) == 2
        np.testing.assert_array_equal(days[0].values[:, 0], [0, 1, 2])
        np.testing.assert_array_equal(days[1].values[:, 0], [3, 4, 5])
        assert [d.day_index for d in days] == [0, 1]

    def test_remainder_discarded(self):
        days = split_days(make_series(np.arange(7.0)), 3)
        assert len(days) == 2
        np.testing.assert_array_equal(days[1].values[:, 0], [3, 4, 5])

    def test_no_complete_day(self):
        with pytest.raises(InsufficientDataError, match="no complete day"):
            split_days(make_series([1.0, 2.0]), 3)

    def test_invalid_h(self):
        with pytest.raises(ParameterError):
            split_days(make_series([1.0, 2.0]), 0)

    def test_concat_reconstructs_input(self, rng):
        values = rng.normal(size=(17, 2))
        series = MultiSeries(values)
        days = split_days(series, 5)
        rebuilt = np.vstack([d.values for d in days] + [values[15:]])
        np.testing.assert_array_equal(rebuilt, values)

    def test_flatten_is_time_major(self):
        day = DayMatrix([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(day.flatten(), [1.0, 2.0, 3.0, 4.0])


class TestMultiSeriesInvariants:
    def test_rejects_nan(self):
        with pytest.raises(ParameterError, match="non-finite"):
            MultiSeries(np.array([[1.0], [np.nan]]))

    def test_rejects_empty(self):
        with pytest.raises(GeometryError):
            MultiSeries(np.empty((0, 1)))

    def test_rejects_decreasing_timestamps(self):
        ts = np.array(["2024-01-02", "2024-01-01"], dtype="datetime64[ns]")
        with pytest.raises(ParameterError, match="strictly increasing"):
            MultiSeries(np.ones((2, 1)), timestamps=ts)

    def test_rejects_irregular_timestamps(self):
        ts = np.array(
            ["2024-01-01T00:00", "2024-01-01T01:00", "2024-01-01T03:00"],
            dtype="datetime64[ns]",
        )
        with pytest.raises(ParameterError, match="evenly spaced"):
            MultiSeries(np.ones((3, 1)), timestamps=ts)

    def test_dim_names_default_and_mismatch(self):
        series = MultiSeries(np.ones((2, 2)))
        assert series.dim_names == ("dim_1", "dim_2")
        with pytest.raises(GeometryError):
            MultiSeries(np.ones((2, 2)), dim_names=("a",))

    def test_column_extraction(self):
        series = MultiSeries(np.array([[1.0, 2.0], [3.0, 4.0]]), dim_names=("a", "b"))
        col = series.column(1)
        assert col.p == 1 and col.dim_names == ("b",)
        np.testing.assert_array_equal(col.values[:, 0], [2.0, 4.0])

    def test_values_are_immutable(self):
        series = make_series([1.0, 2.0])
        with pytest.raises(ValueError):
            series.values[0, 0] = 9.0

    def test_eps_guard_is_tiny(self):
        assert 0 < EPS <= 1e-12
