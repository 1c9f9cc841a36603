import numpy as np
import pytest

from dayahead import baselines
from dayahead.core import GeometryError, InsufficientDataError, ParameterError
from dayahead.evaluation import (
    EvalReport,
    SplitSpec,
    aggregate_reports,
    chrono_split,
    mse,
    rank_methods,
    render_aggregate_table,
    render_table,
    run_backtest,
)
from dayahead.synth import planted_k_series, weekly_series

from conftest import make_series


class TestSplitSpec:
    def test_defaults(self):
        spec = SplitSpec()
        assert (spec.train_frac, spec.valid_frac, spec.test_frac) == (0.70, 0.15, 0.15)

    def test_fractions_must_sum_to_one(self):
        with pytest.raises(ParameterError):
            SplitSpec(0.5, 0.3, 0.3)

    def test_fractions_must_be_proper(self):
        with pytest.raises(ParameterError):
            SplitSpec(1.0, 0.0, 0.0)


class TestChronoSplit:
    @pytest.mark.parametrize("d,expected", [(20, (14, 3, 3)), (10, (7, 1, 2))])
    def test_day_counts(self, d, expected):
        series = make_series(np.arange(float(d * 4)))
        blocks = chrono_split(series, SplitSpec(), 4)
        assert tuple(b.n // 4 for b in blocks) == expected

    def test_three_days_leaves_empty_validation(self):
        series = make_series(np.arange(12.0))
        with pytest.raises(InsufficientDataError, match="validation"):
            chrono_split(series, SplitSpec(), 4)

    def test_too_few_days(self):
        series = make_series(np.arange(8.0))
        with pytest.raises(InsufficientDataError, match="at least 3"):
            chrono_split(series, SplitSpec(), 4)

    def test_blocks_are_contiguous_and_ordered(self):
        values = np.arange(40.0)
        tr, va, te = chrono_split(make_series(values), SplitSpec(), 2)
        rebuilt = np.concatenate([tr.values[:, 0], va.values[:, 0], te.values[:, 0]])
        np.testing.assert_array_equal(rebuilt, values)

    def test_partial_trailing_day_dropped(self):
        series = make_series(np.arange(42.0))  # 10 complete days of 4 + 2 extra
        tr, va, te = chrono_split(series, SplitSpec(), 4)
        assert tr.n + va.n + te.n == 40


class TestMse:
    def test_identical_matrices(self):
        a = np.arange(6.0).reshape(3, 2)
        assert mse(a, a) == 0.0

    def test_unit_offset(self):
        assert mse(np.zeros((2, 1)), np.ones((2, 1))) == 1.0

    def test_hand_computed(self):
        assert mse(np.array([[1.0], [3.0]]), np.array([[2.0], [5.0]])) == 2.5

    def test_geometry_mismatch(self):
        with pytest.raises(GeometryError):
            mse(np.zeros((2, 1)), np.zeros((3, 1)))

    def test_non_negative(self, rng):
        for _ in range(20):
            a, b = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
            assert mse(a, b) >= 0.0


class TestRankMethods:
    def test_strict_ordering(self):
        np.testing.assert_array_equal(rank_methods(np.array([0.1, 0.2, 0.3])), [1, 2, 3])

    def test_average_ties(self):
        np.testing.assert_array_equal(
            rank_methods(np.array([0.1, 0.1, 0.3])), [1.5, 1.5, 3.0]
        )

    def test_infinity_ranks_last(self):
        np.testing.assert_array_equal(
            rank_methods(np.array([np.inf, 0.5, 0.2])), [3.0, 2.0, 1.0]
        )

    def test_rank_sum_is_m_triangle(self, rng):
        for _ in range(50):
            m = int(rng.integers(2, 7))
            errors = rng.choice([0.1, 0.2, 0.2, 0.4, np.inf], size=m)
            assert rank_methods(errors).sum() == pytest.approx(m * (m + 1) / 2)


class TestRunBacktest:
    def test_method_ordering_on_planted_data(self):
        series, _ = planted_k_series(3, 60, h=24, noise=0.1, seed=7)
        report = run_backtest(
            series, ["omniscient", "dayahead", "meanday"], h=24, k_range=(2, 8), seed=0
        )
        om, da, md = report.mean_error
        assert om <= da + 1e-12
        assert da <= md
        ranks = dict(zip(report.methods, report.mean_rank))
        assert ranks["omniscient"] <= ranks["dayahead"] <= ranks["meanday"]

    def test_omniscient_never_worse_per_forecast(self):
        for seed in range(5):
            series, _ = planted_k_series(2 + seed % 3, 40, h=12, noise=0.3, seed=seed)
            report = run_backtest(
                series, ["omniscient", "dayahead"], h=12, k_range=(2, 6), seed=seed
            )
            assert np.all(report.errors[:, 0] <= report.errors[:, 1] + 1e-12)

    def test_one_forecast_per_test_day(self):
        series, _ = planted_k_series(2, 20, h=6, noise=0.1, seed=1)
        report = run_backtest(series, ["meanday"], h=6, k_range=(2, 4), seed=0)
        assert report.n_forecasts == report.metadata["n_days"][2]

    def test_all_methods_run(self):
        series, _ = weekly_series(35, h=12, noise=0.05, seed=2)
        report = run_backtest(
            series,
            ["dayahead", "meanday", "omniscient", "ar", "hw"],
            h=12,
            k_range=(2, 5),
            seed=0,
            ar_order=12,
        )
        assert np.isfinite(report.errors).all()
        assert report.metadata["selected_k"] >= 2

    def test_failed_forecast_records_infinity(self, monkeypatch, caplog):
        series, _ = planted_k_series(2, 20, h=6, noise=0.1, seed=3)
        real = baselines.forecast_ar
        calls = {"n": 0}

        def flaky(model, history, steps):
            calls["n"] += 1
            if calls["n"] == 2:
                raise RuntimeError("synthetic failure")
            return real(model, history, steps)

        monkeypatch.setattr(baselines, "forecast_ar", flaky)
        with caplog.at_level("WARNING", logger="dayahead.evaluation"):
            report = run_backtest(
                series, ["ar", "meanday"], h=6, k_range=(2, 4), seed=0, ar_order=3
            )
        assert np.isinf(report.errors[1, 0])
        assert np.isfinite(report.errors[:, 1]).all()
        assert any("recording +inf" in r.message for r in caplog.records)

    def test_k1_matches_mean_day_exactly(self):
        series, _ = planted_k_series(3, 40, h=8, noise=0.25, seed=11)
        report = run_backtest(series, ["dayahead", "meanday"], h=8, k_range=(1, 1), seed=0)
        assert np.max(np.abs(report.errors[:, 0] - report.errors[:, 1])) <= 1e-12

    def test_unknown_method_rejected(self):
        series, _ = planted_k_series(2, 20, h=6, noise=0.1, seed=4)
        with pytest.raises(ParameterError, match="unknown method"):
            run_backtest(series, ["lstm"], h=6, seed=0)

    def test_deterministic_json(self):
        series, _ = planted_k_series(2, 30, h=8, noise=0.2, seed=5)
        kwargs = dict(methods=["dayahead", "meanday", "ar"], h=8, k_range=(2, 5),
                      seed=9, ar_order=4)
        a = run_backtest(series, **kwargs)
        b = run_backtest(series, **kwargs)
        assert a.to_json() == b.to_json()

    def test_original_unit_errors_tracked(self):
        series, _ = planted_k_series(2, 24, h=6, noise=0.1, seed=6)
        report = run_backtest(series, ["meanday"], h=6, k_range=(2, 4), seed=0)
        assert report.errors_original.shape == report.errors.shape
        # original-unit errors scale with the data variance, normalized do not
        assert not np.allclose(report.errors_original, report.errors)

    def test_multivariate_ar_hw_fit_per_dimension(self):
        series, _ = planted_k_series(2, 30, h=8, noise=0.1, seed=8, p=2)
        report = run_backtest(
            series, ["ar", "hw", "meanday"], h=8, k_range=(2, 4), seed=0, ar_order=4
        )
        assert series.p == 2
        assert np.isfinite(report.errors).all()


class TestEvalReport:
    def _report(self):
        errors = np.array([[0.1, 0.2, 0.3], [0.2, 0.2, 0.1]])
        return EvalReport.from_errors(
            ("a", "b", "c"), errors, errors * 4.0, {"dataset_id": "x"}
        )

    def test_summary_matches_hand_computation(self):
        report = self._report()
        np.testing.assert_allclose(report.mean_error, [0.15, 0.2, 0.2])
        np.testing.assert_allclose(report.mean_rank, [(1 + 2.5) / 2, (2 + 2.5) / 2, 2.0])

    def test_rank_rows_sum_to_triangle(self):
        report = self._report()
        ranks = np.vstack([rank_methods(r) for r in report.errors])
        np.testing.assert_allclose(ranks.sum(axis=1), [6.0, 6.0])

    def test_json_round_trip_and_regeneration(self):
        report = self._report()
        clone = EvalReport.from_json(report.to_json())
        assert clone.to_json() == report.to_json()

    def test_tampered_summary_detected(self):
        doc = self._report().to_dict()
        doc["summary"]["mean_error"][0] = 999.0
        with pytest.raises(ValueError, match="does not match"):
            EvalReport.from_dict(doc)

    def test_errors_csv(self, tmp_path):
        report = self._report()
        path = tmp_path / "errors.csv"
        report.errors_to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "forecast,a,b,c"
        assert len(lines) == 3

    def test_render_table_sorted_by_error(self):
        table = render_table(self._report())
        lines = table.splitlines()
        assert "Algorithm" in lines[0]
        assert lines[2].startswith("a")  # lowest mean error first


class TestAggregateReports:
    def _two_reports(self):
        e1 = np.array([[0.1, 0.4], [0.3, 0.2]])
        e2 = np.array([[0.5, 0.6], [0.2, 0.9]])
        r1 = EvalReport.from_errors(("a", "b"), e1, e1, {"dataset_id": "s1"})
        r2 = EvalReport.from_errors(("a", "b"), e2, e2, {"dataset_id": "s2"})
        return r1, r2

    def test_pooled_forecasts_and_series_stats(self):
        r1, r2 = self._two_reports()
        agg = aggregate_reports([r1, r2])
        assert agg.n_forecasts == 4
        np.testing.assert_allclose(
            agg.metadata["series_mean_error"],
            np.vstack([r1.mean_error, r2.mean_error]).mean(axis=0),
        )
        assert agg.metadata["aggregated_from"] == ["s1", "s2"]
        assert "a" in render_aggregate_table(agg)

    def test_mismatched_methods_rejected(self):
        r1, _ = self._two_reports()
        other = EvalReport.from_errors(("x",), np.ones((1, 1)), np.ones((1, 1)), {})
        with pytest.raises(ParameterError):
            aggregate_reports([r1, other])
