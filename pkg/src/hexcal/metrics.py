"""Error ranges, RMSE magnitudes and improvement percentages."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationDataset, error_vector
from .errors import EmptyInput, ZeroBaseline

REPORT_COLUMNS = ("x_tran", "y_tran", "z_tran", "x_rot", "y_rot", "z_rot")

# magnitudes at or below this are round-off of an exact machine (the FK tolerance)
ZERO_MAGNITUDE = 1e-9


def error_range(errors) -> float:
    """Spread (max - min) of signed errors."""
    values = np.asarray(errors, dtype=float).ravel()
    if values.size == 0:
        raise EmptyInput("error range of an empty list")
    return float(values.max() - values.min())


def rmse_magnitude(r1: float, r2: float, r3: float) -> float:
    if min(r1, r2, r3) < 0:
        raise ValueError("ranges must be non-negative")
    return math.sqrt((r1 * r1 + r2 * r2 + r3 * r3) / 3.0)


def improvement_pct(before: float, after: float) -> float:
    if before == 0:
        raise ZeroBaseline("improvement relative to a zero baseline is undefined")
    return 100.0 * (before - after) / before


@dataclass(frozen=True)
class ErrorReport:
    ranges: tuple[float, ...]
    position_magnitude: float
    orientation_magnitude: float
    pose_count: int
    improvement_position_pct: float | None = None
    improvement_orientation_pct: float | None = None

    @classmethod
    def from_ranges(cls, ranges, pose_count: int, baseline: "ErrorReport | None" = None):
        ranges = tuple(float(r) for r in ranges)
        if len(ranges) != 6:
            raise ValueError("need six ranges")
        pos = rmse_magnitude(*ranges[:3])
        ori = rmse_magnitude(*ranges[3:])
        imp_pos = imp_ori = None
        if baseline is not None:
            imp_pos = _improvement_or_none(baseline.position_magnitude, pos)
            imp_ori = _improvement_or_none(baseline.orientation_magnitude, ori)
        return cls(ranges, pos, ori, pose_count, imp_pos, imp_ori)


def _improvement_or_none(before, after):
    # an exact machine that stays exact reports 0 % rather than an undefined ratio
    if before == 0:
        return 0.0 if after <= ZERO_MAGNITUDE else None
    return improvement_pct(before, after)


def report_from_errors(errors, baseline: ErrorReport | None = None) -> ErrorReport:
    """Report over an (n, 6) array of error vectors."""
    arr = np.asarray(errors, dtype=float).reshape(-1, 6)
    if arr.shape[0] == 0:
        raise EmptyInput("no errors to report")
    return ErrorReport.from_ranges([error_range(arr[:, k]) for k in range(6)], arr.shape[0],
                                   baseline)


def dataset_errors(ds: CalibrationDataset) -> list[tuple[int, np.ndarray]]:
    return [(o.pose_id, error_vector(o)) for o in ds.usable()]


def build_report(ds: CalibrationDataset, baseline: ErrorReport | None = None) -> ErrorReport:
    rows = dataset_errors(ds)
    if not rows:
        raise EmptyInput("dataset has no usable observations")
    return report_from_errors(np.stack([e for _, e in rows]), baseline)


def _fmt(value, digits=None):
    if value is None:
        return ""
    if digits is None:
        return repr(float(value))
    return f"{value:.{digits}f}"


def _has_improvement(report: ErrorReport) -> bool:
    return (report.improvement_position_pct is not None
            or report.improvement_orientation_pct is not None)


def _opt_float(text: str):
    return float(text) if text else None


def report_rows(report: ErrorReport) -> list[list[str]]:
    rows = [["error_range", *(_fmt(r) for r in report.ranges)],
            ["magnitude", _fmt(report.position_magnitude), "", "",
             _fmt(report.orientation_magnitude), "", ""]]
    if _has_improvement(report):
        rows.append(["improvement_pct", _fmt(report.improvement_position_pct), "", "",
                     _fmt(report.improvement_orientation_pct), "", ""])
    rows.append(["pose_count", str(report.pose_count), "", "", "", "", ""])
    return rows


def report_to_csv(report: ErrorReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", *REPORT_COLUMNS])
    writer.writerows(report_rows(report))
    return buf.getvalue()


def report_from_csv(text: str) -> ErrorReport:
    rows = {row[0]: row[1:] for row in csv.reader(io.StringIO(text)) if row}
    header = rows.pop("metric", None)
    if header is None or tuple(header) != REPORT_COLUMNS:
        raise ValueError("not a report CSV (bad header)")
    try:
        ranges = [float(v) for v in rows["error_range"]]
        count = int(rows["pose_count"][0])
        report = ErrorReport.from_ranges(ranges, count)
        if "improvement_pct" in rows:
            imp = rows["improvement_pct"]
            report = ErrorReport(report.ranges, report.position_magnitude,
                                 report.orientation_magnitude, count,
                                 _opt_float(imp[0]), _opt_float(imp[3]))
    except (KeyError, IndexError, ValueError) as exc:
        raise ValueError(f"malformed report CSV: {exc}") from exc
    return report


def render_report(report: ErrorReport, title: str = "Error report") -> str:
    """Aligned plain-text table laid out like the tables of a calibration study."""
    width = 26
    lines = [title, f"poses: {report.pose_count}", ""]
    head = f"{'':<{width}}" + "".join(f"{c:>12}" for c in REPORT_COLUMNS)
    lines.append(head)
    lines.append("-" * len(head))

    def row(label, values, digits):
        cells = "".join(f"{'' if v is None else format(v, f'.{digits}f'):>12}" for v in values)
        return f"{label:<{width}}{cells}"

    lines.append(row("Error range", report.ranges, 2))
    lines.append(row("Magnitude of errors", [report.position_magnitude, None, None,
                                             report.orientation_magnitude, None, None], 2))
    if _has_improvement(report):
        lines.append(row("Magnitude of improvement %",
                         [report.improvement_position_pct, None, None,
                          report.improvement_orientation_pct, None, None], 1))
    lines.append("")
    lines.append("full precision:")
    lines.append("  error_range: " + ", ".join(repr(r) for r in report.ranges))
    lines.append(f"  position_magnitude_mm: {report.position_magnitude!r}")
    lines.append(f"  orientation_magnitude_deg: {report.orientation_magnitude!r}")
    if _has_improvement(report):
        lines.append(f"  improvement_position_pct: {report.improvement_position_pct!r}")
        lines.append(f"  improvement_orientation_pct: {report.improvement_orientation_pct!r}")
    return "\n".join(lines) + "\n"
