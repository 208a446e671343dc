import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hexcal.calibration import CalibrationDataset, PoseObservation
from hexcal.errors import EmptyInput, ZeroBaseline
from hexcal.geometry import PoseVector
from hexcal.metrics import (ErrorReport, build_report, error_range, improvement_pct,
                            render_report, report_from_csv, report_from_errors, report_to_csv,
                            rmse_magnitude)

# published range rows and the magnitudes printed beside them
TABLE_ROWS = [
    ((26.54, 16.67, 13.49), 19.70), ((8.27, 11.99, 12.59), 11.12),
    ((20.25, 18.44, 14.01), 17.76), ((6.86, 10.29, 9.2), 8.90),
    ((25.20, 20.31, 16.14), 20.88), ((6.05, 11.32, 7.99), 8.73),
    ((26.92, 13.74, 9.81), 18.35), ((6.01, 10.39, 8.18), 8.39),
]


def _ranged_errors(ranges, n=7, seed=0):
    """Error vectors whose per-column spread equals ``ranges`` exactly."""
    rng = np.random.default_rng(seed)
    cols = []
    for r in ranges:
        offset = rng.uniform(-5, 5)
        inner = rng.uniform(0, r, n - 2)
        cols.append(np.concatenate([[offset, offset + r], offset + inner]))
    return np.column_stack(cols)


def _dataset_from_errors(errors):
    obs = [PoseObservation(i + 1, PoseVector(), PoseVector.from_array(e))
           for i, e in enumerate(errors)]
    return CalibrationDataset(obs)


def test_error_range_examples():
    assert error_range([0, 0, 0]) == 0
    assert error_range([-3, 1, 5]) == 8
    assert error_range([2.5]) == 0


def test_error_range_empty():
    with pytest.raises(EmptyInput):
        error_range([])


def test_error_range_matches_linear_scan(rng):
    values = list(rng.normal(size=200))
    lo = hi = values[0]
    for v in values:
        lo, hi = min(lo, v), max(hi, v)
    assert error_range(values) == hi - lo


@pytest.mark.parametrize("ranges,expected", TABLE_ROWS)
def test_rmse_reproduces_published_magnitudes(ranges, expected):
    assert rmse_magnitude(*ranges) == pytest.approx(expected, abs=0.01)


def test_rmse_zero_and_negative():
    assert rmse_magnitude(0, 0, 0) == 0
    with pytest.raises(ValueError):
        rmse_magnitude(-1, 0, 0)


def test_improvement_examples():
    assert improvement_pct(19.70, 17.76) == pytest.approx(9.8, abs=0.1)
    assert improvement_pct(19.70, 20.88) == pytest.approx(-6.0, abs=0.1)
    assert improvement_pct(4.2, 4.2) == 0


def test_improvement_zero_baseline():
    with pytest.raises(ZeroBaseline):
        improvement_pct(0, 1)


@given(st.floats(0.01, 100), st.floats(0.01, 100))
def test_improvement_swap_relation(a, b):
    # swapping before and after flips the sign and rescales by the denominators
    assert improvement_pct(a, b) * a == pytest.approx(-improvement_pct(b, a) * b, rel=1e-9, abs=1e-9)


def test_report_from_published_compensated_row():
    ranges = (26.92, 13.74, 9.81, 6.01, 10.39, 8.18)
    report = build_report(_dataset_from_errors(_ranged_errors(ranges)))
    np.testing.assert_allclose(report.ranges, ranges, atol=1e-12)
    assert report.position_magnitude == pytest.approx(18.35, abs=0.01)
    assert report.orientation_magnitude == pytest.approx(8.39, abs=0.01)
    assert report.pose_count == 7
    assert report.improvement_position_pct is None


def test_report_with_published_baseline():
    before = ErrorReport.from_ranges((26.54, 16.67, 13.49, 8.27, 11.99, 12.59), 34)
    errors = _ranged_errors((20.25, 18.44, 14.01, 6.86, 10.29, 9.2), n=27)
    report = report_from_errors(errors, before)
    assert report.improvement_position_pct == pytest.approx(9.8, abs=0.1)
    assert report.improvement_orientation_pct == pytest.approx(19.9, abs=0.1)


def test_zero_error_report():
    report = build_report(_dataset_from_errors(np.zeros((5, 6))))
    assert report.ranges == (0.0,) * 6
    assert report.position_magnitude == report.orientation_magnitude == 0


def test_zero_baseline_and_zero_after_is_zero_percent():
    zero = ErrorReport.from_ranges([0] * 6, 3)
    report = ErrorReport.from_ranges([0] * 6, 3, zero)
    assert report.improvement_position_pct == 0.0
    tiny = ErrorReport.from_ranges([1e-13] * 6, 3, zero)
    assert tiny.improvement_position_pct == 0.0
    assert ErrorReport.from_ranges([0.1] * 6, 3, zero).improvement_position_pct is None


def test_magnitudes_recompute_from_ranges(rng):
    report = report_from_errors(rng.normal(size=(30, 6)))
    r = report.ranges
    assert report.position_magnitude == math.sqrt((r[0] ** 2 + r[1] ** 2 + r[2] ** 2) / 3)
    assert report.orientation_magnitude == math.sqrt((r[3] ** 2 + r[4] ** 2 + r[5] ** 2) / 3)


def test_excluded_observations_not_counted():
    errors = _ranged_errors((1, 2, 3, 0.1, 0.2, 0.3))
    ds = _dataset_from_errors(np.vstack([errors, [[50] * 6]])).exclude([8], "outlier")
    report = build_report(ds)
    assert report.pose_count == 7
    np.testing.assert_allclose(report.ranges, (1, 2, 3, 0.1, 0.2, 0.3), atol=1e-12)


def test_build_report_empty():
    ds = _dataset_from_errors(np.zeros((2, 6))).exclude([1, 2], "outlier")
    with pytest.raises(EmptyInput):
        build_report(ds)


def test_build_report_order_invariant(rng):
    ds = _dataset_from_errors(rng.normal(size=(20, 6)))
    flipped = CalibrationDataset(list(reversed(ds.observations)))
    assert build_report(ds) == build_report(flipped)


def test_csv_round_trip():
    base = ErrorReport.from_ranges((26.54, 16.67, 13.49, 8.27, 11.99, 12.59), 34)
    report = ErrorReport.from_ranges((20.25, 18.44, 14.01, 6.86, 10.29, 9.2), 27, base)
    text = report_to_csv(report)
    assert text.splitlines()[0] == "metric,x_tran,y_tran,z_tran,x_rot,y_rot,z_rot"
    assert report_from_csv(text) == report
    assert report_from_csv(report_to_csv(base)) == base


def test_csv_rejects_bad_header():
    with pytest.raises(ValueError):
        report_from_csv("metric,a,b\n")


def test_render_two_decimals_and_full_precision():
    base = ErrorReport.from_ranges((26.54, 16.67, 13.49, 8.27, 11.99, 12.59), 34)
    report = ErrorReport.from_ranges((20.25, 18.44, 14.01, 6.86, 10.29, 9.2), 27, base)
    text = render_report(report, "Compensated")
    assert "17.76" in text and "8.90" in text
    assert "9.8" in text and "19.9" in text
    assert repr(report.position_magnitude) in text
    assert "Magnitude of improvement %" in text
    assert "improvement" not in render_report(base)
