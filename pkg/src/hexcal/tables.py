"""CSV formats: datasets, predictions, per-pose errors and DH audit rows."""
from __future__ import annotations

import csv
import io
import math

import numpy as np

from .calibration import CalibrationDataset, PoseObservation
from .geometry import PoseVector

DATASET_HEADER = ("pose_id", "tx", "ty", "tz", "ta", "tb", "tg",
                  "mx", "my", "mz", "ma", "mb", "mg", "excluded", "reason")
PREDICTION_HEADER = ("pose_id", "tx", "ty", "tz", "ta", "tb", "tg",
                     "px", "py", "pz", "pa", "pb", "pg", "dropped", "reason")
ERROR_HEADER = ("pose_id", "x_tran", "y_tran", "z_tran", "x_rot", "y_rot", "z_rot")
DH_HEADER = ("pose_id", "leg", "row_index", "theta_deg", "d_mm", "a_mm", "alpha_deg")


class TableError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _g9(value: float) -> str:
    return f"{value:.9g}"


def _full(value: float) -> str:
    return repr(float(value))


def _writer(buf):
    return csv.writer(buf, lineterminator="\n")


def _rows(text: str, header):
    reader = csv.reader(io.StringIO(text))
    try:
        first = next(reader)
    except StopIteration:
        raise TableError("file is empty", 1) from None
    if tuple(first) != tuple(header):
        raise TableError(f"expected header {','.join(header)}", 1)
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise TableError(f"expected {len(header)} columns, got {len(row)}", lineno)
        yield lineno, row


def _floats(row, lineno, start, stop):
    try:
        return [float(v) for v in row[start:stop]]
    except ValueError as exc:
        raise TableError(str(exc), lineno) from None


def _pose_id(row, lineno):
    try:
        return int(row[0])
    except ValueError:
        raise TableError(f"bad pose_id '{row[0]}'", lineno) from None


def dataset_to_csv(ds: CalibrationDataset) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(DATASET_HEADER)
    for obs in ds.observations:
        measured = (["nan"] * 6 if obs.measured is None
                    else [_g9(v) for v in obs.measured.as_array()])
        reason = ds.excluded.get(obs.pose_id, "")
        w.writerow([obs.pose_id, *(_g9(v) for v in obs.target.as_array()), *measured,
                    1 if reason else 0, reason])
    return buf.getvalue()


def dataset_from_csv(text: str) -> CalibrationDataset:
    observations, excluded = [], {}
    for lineno, row in _rows(text, DATASET_HEADER):
        pose_id = _pose_id(row, lineno)
        values = _floats(row, lineno, 1, 13)
        target = PoseVector.from_array(values[:6])
        measured = None if any(math.isnan(v) for v in values[6:]) else \
            PoseVector.from_array(values[6:])
        if row[13] not in ("0", "1"):
            raise TableError("excluded must be 0 or 1", lineno)
        if row[13] == "1":
            excluded[pose_id] = row[14] or "excluded"
        elif measured is None:
            raise TableError("missing measurement on a non-excluded row", lineno)
        observations.append(PoseObservation(pose_id, target, measured))
    try:
        return CalibrationDataset(observations, excluded)
    except ValueError as exc:
        raise TableError(str(exc)) from exc


def predictions_to_csv(targets: dict, kept, dropped) -> str:
    """``targets`` maps pose_id -> target pose; rows are written in pose-id order."""
    rows = [(pid, pose, 0, "") for pid, pose in kept]
    rows += [(pid, pose, 1, reason) for pid, pose, reason in dropped]
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(PREDICTION_HEADER)
    for pid, pose, flag, reason in sorted(rows, key=lambda r: r[0]):
        w.writerow([pid, *(_full(v) for v in targets[pid].as_array()),
                    *(_full(v) for v in pose.as_array()), flag, reason])
    return buf.getvalue()


def predictions_from_csv(text: str):
    """Returns ``[(pose_id, target, predicted, dropped, reason)]``."""
    out = []
    for lineno, row in _rows(text, PREDICTION_HEADER):
        values = _floats(row, lineno, 1, 13)
        out.append((_pose_id(row, lineno), PoseVector.from_array(values[:6]),
                    PoseVector.from_array(values[6:]), row[13] == "1", row[14]))
    return out


def errors_to_csv(rows, absolute: bool = False) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(ERROR_HEADER)
    for pid, err in rows:
        err = np.abs(err) if absolute else np.asarray(err)
        w.writerow([pid, *(_full(v) for v in err)])
    return buf.getvalue()


def errors_from_csv(text: str):
    return [(_pose_id(row, n), np.array(_floats(row, n, 1, 7))) for n, row in _rows(text, ERROR_HEADER)]


def dh_rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(DH_HEADER)
    for pid, leg, idx, theta, d, a, alpha in rows:
        w.writerow([pid, leg, idx, _full(theta), _full(d), _full(a), _full(alpha)])
    return buf.getvalue()


def sniff_header(text: str) -> tuple[str, ...]:
    first = text.split("\n", 1)[0].strip()
    return tuple(first.split(","))
