"""Metric, stratification, and report tests."""
import datetime as dt
import json
import math

import numpy as np
import pytest

from gridcast.errors import (
    EmptyInputError,
    LengthMismatchError,
    TooFewRowsError,
    ZeroVarianceError,
)
from gridcast.evaluate import (
    CORRELATION_COLUMNS,
    EvalReport,
    MetricSet,
    ReportCell,
    compute_metrics,
    correlation_matrix,
    diurnal_profile,
    mae,
    pairwise_correlation,
    pearson,
    r2,
    read_report_json,
    rmse,
    stratify_by_season,
    write_correlation_csv,
    write_diurnal_csv,
    write_report_csv,
    write_report_json,
)
from gridcast.types import Season, TimePoint, build_merged_frame


def day_of_times(date, n=288):
    return [TimePoint(date, slot // 12, (slot % 12) * 5) for slot in range(n)]


class TestRmse:
    def test_perfect_prediction(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_hand_worked(self):
        assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5), abs=1e-9)

    def test_single_pair(self):
        assert rmse([2.0], [5.0]) == pytest.approx(3.0, abs=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            rmse([1.0], [1.0, 2.0])

    def test_empty(self):
        with pytest.raises(EmptyInputError):
            rmse([], [])


class TestMae:
    def test_perfect_prediction(self):
        assert mae([7.0, 7.0], [7.0, 7.0]) == 0.0

    def test_hand_worked(self):
        assert mae([0.0, 0.0], [3.0, 4.0]) == pytest.approx(3.5, abs=1e-9)

    def test_sign_symmetric_errors(self):
        assert mae([2.0, -2.0], [0.0, 0.0]) == pytest.approx(2.0, abs=1e-12)


class TestR2:
    def test_perfect_prediction(self):
        assert r2([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0)

    def test_mean_predictor_scores_zero(self):
        rng = np.random.default_rng(0)
        actual = rng.normal(size=100)
        pred = np.full(100, actual.mean())
        assert abs(r2(pred, actual)) < 1e-12

    def test_worse_than_mean_is_negative(self):
        assert r2([10.0, 10.0], [0.0, 2.0]) == pytest.approx(-81.0, abs=1e-9)

    def test_constant_actuals_raise(self):
        with pytest.raises(ZeroVarianceError):
            r2([1.0, 2.0], [5.0, 5.0])

    def test_single_pair_raises(self):
        with pytest.raises(ZeroVarianceError):
            r2([1.0], [2.0])

    def test_affine_invariance(self):
        rng = np.random.default_rng(1)
        actual = rng.normal(size=200)
        pred = actual + rng.normal(0, 0.5, size=200)
        base = r2(pred, actual)
        for a, b in ((3.7, -12.0), (0.001, 5.0), (-2.0, 0.0)):
            assert r2(a * pred + b, a * actual + b) == pytest.approx(base, abs=1e-9)


class TestPearson:
    def test_identity(self):
        x = np.arange(10.0)
        assert pearson(x, x) == pytest.approx(1.0)

    def test_negation(self):
        x = np.arange(10.0)
        assert pearson(x, -x) == pytest.approx(-1.0)

    def test_orthogonal_sample(self):
        assert pearson([1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0]) == pytest.approx(0.0, abs=1e-12)

    def test_constant_input_raises(self):
        with pytest.raises(ZeroVarianceError):
            pearson([1.0, 1.0], [1.0, 2.0])
        with pytest.raises(ZeroVarianceError):
            pearson([1.0, 2.0], [3.0, 3.0])

    def test_bounded_on_random_vectors(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            x = rng.normal(size=30)
            y = rng.normal(size=30)
            assert -1.0 <= pearson(x, y) <= 1.0

    def test_matches_numpy_corrcoef(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=64)
        y = 0.3 * x + rng.normal(size=64)
        assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)


class TestMetricOrdering:
    def test_rmse_at_least_mae_on_random_vectors(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            n = rng.integers(2, 40)
            pred = rng.normal(size=n)
            actual = rng.normal(size=n)
            assert rmse(pred, actual) >= mae(pred, actual) - 1e-15


class TestComputeMetrics:
    def test_fields(self):
        m = compute_metrics([0.0, 0.0], [3.0, 4.0])
        assert m.rmse == pytest.approx(math.sqrt(12.5))
        assert m.mae == pytest.approx(3.5)
        assert m.n == 2
        assert m.units == "watts"

    def test_r2_none_on_constant_actuals(self):
        m = compute_metrics([1.0, 2.0], [5.0, 5.0])
        assert m.r2 is None
        assert m.rmse > 0

    def test_scaled_units_flag(self):
        m = compute_metrics([0.1, 0.2], [0.2, 0.4], units="scaled")
        assert m.units == "scaled"

    def test_invalid_units_rejected(self):
        with pytest.raises(ValueError):
            MetricSet(rmse=1.0, mae=0.5, r2=None, n=3, units="joules")


class TestStratifyBySeason:
    def test_single_month_yields_single_stratum(self):
        times = [TimePoint(dt.date(2024, 1, d), 10, 0) for d in range(1, 11)]
        rng = np.random.default_rng(5)
        actual = rng.uniform(100, 500, size=10)
        pred = actual + rng.normal(size=10)
        strata = stratify_by_season(pred, actual, times)
        assert set(strata) == {Season.DJF}
        assert strata[Season.DJF].n == 10

    def test_counts_partition_total(self):
        times = []
        for month in (1, 4, 7, 10, 12):
            times += [TimePoint(dt.date(2023, month, d), 0, 0) for d in range(1, 8)]
        rng = np.random.default_rng(6)
        actual = rng.uniform(size=len(times))
        pred = rng.uniform(size=len(times))
        strata = stratify_by_season(pred, actual, times)
        assert sum(m.n for m in strata.values()) == len(times)
        assert set(strata) == set(Season)

    def test_per_stratum_rmse_matches_filter_oracle(self):
        times = [TimePoint(dt.date(2023, 3, 1), 0, 0)] * 4 + \
                [TimePoint(dt.date(2023, 7, 1), 0, 0)] * 3
        actual = np.array([1.0, 2.0, 3.0, 4.0, 10.0, 20.0, 30.0])
        pred = actual + np.array([1.0, -1.0, 1.0, -1.0, 2.0, 2.0, -2.0])
        strata = stratify_by_season(pred, actual, times)
        assert strata[Season.MAM].rmse == pytest.approx(rmse(pred[:4], actual[:4]))
        assert strata[Season.JJA].rmse == pytest.approx(rmse(pred[4:], actual[4:]))

    def test_times_must_match_pairs(self):
        with pytest.raises(LengthMismatchError):
            stratify_by_season([1.0], [1.0], [])


class TestDiurnalProfile:
    def frame_for(self, dates, consumption_fn):
        times, cons, weather = [], [], []
        for date in dates:
            for t in day_of_times(date):
                times.append(t)
                cons.append(consumption_fn(t))
                weather.append([20.0, 0.0, 15.0, 60.0, 19.0, 50.0])
        return build_merged_frame(times, cons, weather)

    def test_constant_consumption_gives_flat_profile(self):
        frame = self.frame_for([dt.date(2023, 6, 1)], lambda t: 350.0)
        profiles = diurnal_profile(frame)
        assert set(profiles) == {Season.JJA}
        assert profiles[Season.JJA].shape == (288,)
        assert np.allclose(profiles[Season.JJA], 350.0)

    def test_injected_peak_slot_is_argmax(self):
        peak_slot = 100
        frame = self.frame_for(
            [dt.date(2023, 6, d) for d in (1, 2, 3)],
            lambda t: 2000.0 if t.slot == peak_slot else 200.0)
        profiles = diurnal_profile(frame)
        assert int(np.argmax(profiles[Season.JJA])) == peak_slot

    def test_median_resists_one_outlier_day(self):
        # 3 calm days and 1 day with a spike at slot 10: median stays calm.
        def load(t):
            return 5000.0 if (t.date.day == 4 and t.slot == 10) else 100.0
        frame = self.frame_for([dt.date(2023, 6, d) for d in (1, 2, 3, 4)], load)
        profiles = diurnal_profile(frame, statistic="median")
        assert profiles[Season.JJA][10] == pytest.approx(100.0)
        means = diurnal_profile(frame, statistic="mean")
        assert means[Season.JJA][10] == pytest.approx((3 * 100.0 + 5000.0) / 4)

    def test_partial_day_leaves_nan_slots(self):
        times = day_of_times(dt.date(2023, 6, 1), n=12)  # first hour only
        frame = build_merged_frame(
            times, [100.0] * 12, [[20.0, 0.0, 15.0, 60.0, 19.0, 50.0]] * 12)
        profile = diurnal_profile(frame)[Season.JJA]
        assert profile.shape == (288,)
        assert np.isfinite(profile[:12]).all()
        assert np.isnan(profile[12:]).all()

    def test_unknown_statistic_rejected(self):
        frame = self.frame_for([dt.date(2023, 6, 1)], lambda t: 1.0)
        with pytest.raises(ValueError):
            diurnal_profile(frame, statistic="mode")


class TestCorrelationMatrix:
    def test_duplicated_column_pair(self):
        rng = np.random.default_rng(7)
        col = rng.normal(size=50)
        matrix = pairwise_correlation(np.column_stack([col, col]))
        assert matrix[0, 1] == pytest.approx(1.0)

    def test_diagonal_is_one(self):
        rng = np.random.default_rng(8)
        matrix = pairwise_correlation(rng.normal(size=(30, 5)))
        assert np.array_equal(np.diag(matrix), np.ones(5))

    def test_matches_brute_force_pairwise(self):
        rng = np.random.default_rng(9)
        cols = rng.normal(size=(40, 3))
        matrix = pairwise_correlation(cols)
        for i in range(3):
            for j in range(3):
                expected = 1.0 if i == j else pearson(cols[:, i], cols[:, j])
                assert matrix[i, j] == pytest.approx(expected, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(10)
        matrix = pairwise_correlation(rng.normal(size=(25, 6)))
        assert np.array_equal(matrix, matrix.T)

    def test_constant_column_reported_missing_not_fatal(self):
        rng = np.random.default_rng(11)
        cols = np.column_stack([rng.normal(size=20), np.full(20, 3.0)])
        matrix = pairwise_correlation(cols)
        assert np.isnan(matrix[0, 1]) and np.isnan(matrix[1, 0])
        assert matrix[0, 0] == 1.0 and matrix[1, 1] == 1.0

    def test_too_few_rows(self):
        with pytest.raises(TooFewRowsError):
            pairwise_correlation(np.ones((1, 3)))

    def test_frame_correlation_shape_and_labels(self):
        rng = np.random.default_rng(12)
        times = day_of_times(dt.date(2023, 9, 1), n=48)
        cons = rng.uniform(100, 900, size=48)
        weather = rng.uniform(1, 50, size=(48, 6))
        frame = build_merged_frame(times, cons, weather)
        matrix = correlation_matrix(frame)
        assert matrix.shape == (7, 7)
        assert len(CORRELATION_COLUMNS) == 7
        assert CORRELATION_COLUMNS[-1] == "consumption_w"
        # consumption row matches direct pearson against each weather column
        for i in range(6):
            assert matrix[6, i] == pytest.approx(
                pearson(cons, weather[:, i]), abs=1e-12)


def small_report():
    return EvalReport(
        metadata={"seed": 7, "config_hash": "abc123", "created": "2026-01-01 00:00"},
        cells=[
            ReportCell("naive", "test",
                       MetricSet(rmse=10.5, mae=8.25, r2=0.875, n=100)),
            ReportCell("lstm", "test",
                       MetricSet(rmse=9.0, mae=7.0, r2=0.9125, n=100)),
            ReportCell("lstm", "test/DJF",
                       MetricSet(rmse=11.0, mae=8.0, r2=None, n=25)),
        ],
    )


class TestEvalReport:
    def test_cell_lookup(self):
        report = small_report()
        assert report.cell("lstm", "test").rmse == 9.0
        assert report.cell("lstm", "nope") is None
        assert report.models() == ("naive", "lstm")

    def test_json_round_trip_is_exact(self, tmp_path):
        report = small_report()
        path = tmp_path / "report.json"
        write_report_json(report, path)
        loaded = read_report_json(path)
        assert loaded.metadata == report.metadata
        assert loaded.cells == report.cells

    def test_json_preserves_float_bits(self, tmp_path):
        value = 0.1 + 0.2  # not exactly representable as a decimal literal
        report = EvalReport(metadata={}, cells=[
            ReportCell("m", "s", MetricSet(rmse=value, mae=value, r2=value, n=2))])
        path = tmp_path / "report.json"
        write_report_json(report, path)
        assert read_report_json(path).cells[0].metrics.rmse == value

    def test_missing_r2_serializes_as_null(self, tmp_path):
        report = small_report()
        path = tmp_path / "report.json"
        write_report_json(report, path)
        data = json.loads(path.read_text())
        djf = [c for c in data["cells"] if c["slice"] == "test/DJF"][0]
        assert djf["metrics"]["r2"] is None

    def test_csv_has_one_row_per_model_slice_metric(self, tmp_path):
        report = small_report()
        path = tmp_path / "report.csv"
        write_report_csv(report, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "model,slice,metric,value,n,units"
        assert len(lines) == 1 + 3 * len(report.cells)
        assert lines[1].startswith("naive,test,rmse,10.5")
        r2_row = [l for l in lines if l.startswith("lstm,test/DJF,r2")][0]
        assert r2_row == "lstm,test/DJF,r2,,25,watts"


class TestAuxWriters:
    def test_correlation_csv_round_readable(self, tmp_path):
        rng = np.random.default_rng(13)
        matrix = pairwise_correlation(rng.normal(size=(20, 7)))
        path = tmp_path / "correlation.csv"
        write_correlation_csv(matrix, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "," + ",".join(CORRELATION_COLUMNS)
        assert len(lines) == 8
        first_value = float(lines[1].split(",")[1])
        assert first_value == 1.0

    def test_diurnal_csv_rows(self, tmp_path):
        profiles = {Season.DJF: np.full(288, 5.0)}
        path = tmp_path / "diurnal.csv"
        write_diurnal_csv(profiles, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "season,slot,value"
        assert len(lines) == 1 + 288
        assert lines[1] == "DJF,0,5.0"
