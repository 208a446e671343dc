"""Least-squares pose compensation: the three correction strategies.

=======  ==========================  ==========================
option   position                    orientation
=======  ==========================  ==========================
1        DH-space corrections        unchanged target
2        DH-space corrections        pose-space least squares
3        pose-space least squares    pose-space least squares
=======  ==========================  ==========================

Every correction is an affine model of the error (measured - target) as a
function of the target value of the same quantity. A prediction is the
command ``c`` for which the fitted error lands the machine on the target,
``c + f(c) = t``, i.e. ``c = (t - intercept) / (1 + slope)``.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .dh import DH_PARAMS, PRISMATIC_ROW, chain_forward, extract_all_chains, unify_positions
from .errors import InsufficientData, SingularPose
from .geometry import POSE_FIELDS, PlatformGeometry, PoseVector, wrap_deg
from .kinematics import leg_lengths, leg_violations, normalized_determinant, NEAR_SINGULAR_FACTOR

log = logging.getLogger(__name__)

OUTLIER = "outlier"
OUT_OF_RANGE = "out_of_range"
UNREACHABLE = "unreachable"

ORIENTATION_FIELDS = POSE_FIELDS[3:]
_ANGULAR_DH = (0, 3)  # theta, alpha_link
_SLOPE_GUARD = 1e-12


@dataclass(frozen=True)
class PoseObservation:
    pose_id: int
    target: PoseVector
    measured: PoseVector | None


@dataclass(frozen=True)
class CalibrationDataset:
    observations: tuple[PoseObservation, ...]
    excluded: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        obs = tuple(self.observations)
        ids = [o.pose_id for o in obs]
        if len(set(ids)) != len(ids):
            raise ValueError("pose ids must be unique")
        excluded = dict(self.excluded)
        unknown = set(excluded) - set(ids)
        if unknown:
            raise ValueError(f"excluded ids not in dataset: {sorted(unknown)}")
        for o in obs:
            if o.measured is None and o.pose_id not in excluded:
                raise ValueError(f"pose {o.pose_id} has no measurement and is not excluded")
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "excluded", excluded)

    def __len__(self):
        return len(self.observations)

    def usable(self) -> list[PoseObservation]:
        """Non-excluded observations, ordered by pose id."""
        return sorted((o for o in self.observations if o.pose_id not in self.excluded),
                      key=lambda o: o.pose_id)

    def exclude(self, ids, reason: str) -> "CalibrationDataset":
        excluded = dict(self.excluded)
        for i in ids:
            excluded.setdefault(int(i), reason)
        return CalibrationDataset(self.observations, excluded)

    def out_of_bounds_targets(self, geom: PlatformGeometry) -> list[int]:
        return [o.pose_id for o in self.observations if not geom.pose_bounds.contains(o.target)]


def error_vector(obs: PoseObservation) -> np.ndarray:
    """measured - target; angle differences taken on the (-180, 180] branch."""
    err = obs.measured.as_array() - obs.target.as_array()
    err[3:] = wrap_deg(err[3:])
    return err


@dataclass(frozen=True)
class AffineCorrection:
    """Fitted error model ``error(x) = slope * x + intercept``."""

    slope: float
    intercept: float
    degenerate: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.slope) and math.isfinite(self.intercept)):
            raise ValueError("affine correction coefficients must be finite")

    def error_at(self, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept

    def command_for(self, target: float) -> float:
        """The command ``c`` with ``c + error_at(c) == target``."""
        gain = 1.0 + self.slope
        if abs(gain) < _SLOPE_GUARD:
            log.warning("fitted slope %.3g cancels the command; using first-order correction",
                        self.slope)
            return float(target - self.error_at(target))
        return float((target - self.intercept) / gain)


def fit_affine(xs, ys) -> AffineCorrection:
    """Ordinary least-squares line through ``(xs, ys)``.

    When all ``xs`` coincide the slope is undefined; the fit falls back to the
    mean of ``ys`` with zero slope and is flagged ``degenerate``.
    """
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError("xs and ys must have equal length")
    if x.size < 2:
        raise InsufficientData(f"need at least 2 points for a line fit, got {x.size}")
    x_mean = x.sum() / x.size
    y_mean = y.sum() / y.size
    dx = x - x_mean
    sxx = float(dx @ dx)
    if np.ptp(x) <= 1e-12 * max(1.0, float(np.max(np.abs(x)))) or sxx == 0.0:
        return AffineCorrection(0.0, float(y_mean), degenerate=True)
    slope = float(dx @ (y - y_mean)) / sxx
    return AffineCorrection(slope, float(y_mean - slope * x_mean))


def intercept_only(ys) -> AffineCorrection:
    y = np.asarray(ys, dtype=float).ravel()
    return AffineCorrection(0.0, float(y.sum() / y.size))


@dataclass(frozen=True)
class CompensationModel:
    option: int
    dh_corrections: dict = field(default_factory=dict)  # (leg, row, param name) -> AffineCorrection
    pose_corrections: dict = field(default_factory=dict)  # pose field name -> AffineCorrection

    def __post_init__(self):
        if self.option not in (1, 2, 3):
            raise ValueError("option must be 1, 2 or 3")
        expected_pose = {1: (), 2: ORIENTATION_FIELDS, 3: POSE_FIELDS}[self.option]
        if set(self.pose_corrections) != set(expected_pose):
            raise ValueError(f"option {self.option} needs pose corrections for {expected_pose}")
        if self.option == 3 and self.dh_corrections:
            raise ValueError("option 3 does not use DH corrections")
        if self.option in (1, 2) and len(self.dh_corrections) != 6 * 6 * 4:
            raise ValueError("options 1 and 2 need a correction for every DH entry")


def _require_usable(ds: CalibrationDataset) -> list[PoseObservation]:
    usable = ds.usable()
    if len(usable) < 2:
        raise InsufficientData(f"need at least 2 usable observations, got {len(usable)}")
    return usable


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _chain_params(pose_id: int, pose: PoseVector, geom: PlatformGeometry) -> np.ndarray:
    try:
        chains = extract_all_chains(pose, geom)
    except SingularPose as exc:
        raise SingularPose(str(exc), pose_id=pose_id) from exc
    return np.stack([c.params() for c in chains])


def is_joint_variable(row: int, param: int) -> bool:
    if row == PRISMATIC_ROW:
        return param == 1
    return param == 0


def fit_dh_corrections(usable, geom: PlatformGeometry, workers: int = 1) -> dict:
    targets = np.stack(_map(lambda o: _chain_params(o.pose_id, o.target, geom), usable, workers))
    measured = np.stack(_map(lambda o: _chain_params(o.pose_id, o.measured, geom), usable, workers))
    errors = measured - targets
    errors[..., _ANGULAR_DH] = wrap_deg(errors[..., _ANGULAR_DH])
    corrections = {}
    for leg in range(6):
        for row in range(6):
            for p, name in enumerate(DH_PARAMS):
                e = errors[:, leg, row, p]
                if is_joint_variable(row, p):
                    corrections[(leg, row, name)] = fit_affine(targets[:, leg, row, p], e)
                else:
                    corrections[(leg, row, name)] = intercept_only(e)
    return corrections


def fit_pose_corrections(usable, names) -> dict:
    targets = np.stack([o.target.as_array() for o in usable])
    errors = np.stack([error_vector(o) for o in usable])
    return {name: fit_affine(targets[:, POSE_FIELDS.index(name)],
                             errors[:, POSE_FIELDS.index(name)])
            for name in names}


def fit_model(ds: CalibrationDataset, geom: PlatformGeometry, option: int,
              workers: int = 1) -> CompensationModel:
    usable = _require_usable(ds)
    dh = fit_dh_corrections(usable, geom, workers) if option in (1, 2) else {}
    names = {1: (), 2: ORIENTATION_FIELDS, 3: POSE_FIELDS}[option]
    return CompensationModel(option, dh, fit_pose_corrections(usable, names))


def _dh_position(model: CompensationModel, pose_id: int, target: PoseVector,
                 geom: PlatformGeometry) -> np.ndarray:
    try:
        chains = extract_all_chains(target, geom)
    except SingularPose as exc:
        raise SingularPose(str(exc), pose_id=pose_id) from exc
    positions = []
    for chain in chains:
        params = chain.params()
        for row in range(6):
            for p, name in enumerate(DH_PARAMS):
                params[row, p] = model.dh_corrections[(chain.leg_index, row, name)].command_for(
                    params[row, p])
        positions.append(chain_forward(chain.with_params(params)).translation)
    return unify_positions(positions) - geom.grip_home()


def predict(model: CompensationModel, targets, geom: PlatformGeometry,
            workers: int = 1) -> list[tuple[int, PoseVector]]:
    """Apply a fitted model to ``(pose_id, target)`` pairs."""
    targets = list(targets)

    def one(item):
        pose_id, target = item
        values = target.as_array()
        if model.option in (1, 2):
            values[:3] = _dh_position(model, pose_id, target, geom)
        for name, corr in model.pose_corrections.items():
            k = POSE_FIELDS.index(name)
            values[k] = corr.command_for(values[k])
        return pose_id, PoseVector.from_array(values)

    return _map(one, targets, workers)


def _compensate(ds, geom, option, workers):
    model = fit_model(ds, geom, option, workers)
    return predict(model, [(o.pose_id, o.target) for o in ds.usable()], geom, workers)


def compensate_option1(ds: CalibrationDataset, geom: PlatformGeometry,
                       workers: int = 1) -> list[tuple[int, PoseVector]]:
    """DH-corrected position, target orientation passed through unchanged."""
    return _compensate(ds, geom, 1, workers)


def compensate_option2(ds: CalibrationDataset, geom: PlatformGeometry,
                       workers: int = 1) -> list[tuple[int, PoseVector]]:
    return _compensate(ds, geom, 2, workers)


def compensate_option3(ds: CalibrationDataset, geom: PlatformGeometry,
                       workers: int = 1) -> list[tuple[int, PoseVector]]:
    return _compensate(ds, geom, 3, workers)


COMPENSATORS = {1: compensate_option1, 2: compensate_option2, 3: compensate_option3}


def filter_workspace(predicted, geom: PlatformGeometry):
    """Split predictions into ``kept`` and ``dropped`` (with a reason string).

    A prediction is dropped when any pose parameter leaves ``pose_bounds`` or
    any leg leaves ``[leg_min, leg_max]``; every violated bound is named.
    """
    kept, dropped = [], []
    for pose_id, pose in predicted:
        reasons = geom.pose_bounds.violations(pose)
        reasons += leg_violations(leg_lengths(pose, geom), geom)
        if reasons:
            dropped.append((pose_id, pose, "; ".join(reasons)))
        else:
            kept.append((pose_id, pose))
    return kept, dropped


def detect_outliers(ds: CalibrationDataset, geom: PlatformGeometry,
                    factor: float = NEAR_SINGULAR_FACTOR) -> list[tuple[int, float]]:
    """Usable observations whose target is within ``factor * singularity_tol`` of singular."""
    flagged = []
    for obs in ds.usable():
        det = normalized_determinant(obs.target, geom)
        if det < factor * geom.singularity_tol:
            flagged.append((obs.pose_id, det))
    return flagged


def model_to_text(model: CompensationModel) -> str:
    def coeffs(c):
        return {"slope": c.slope, "intercept": c.intercept, "degenerate": c.degenerate}

    doc = {
        "option": model.option,
        "dh_corrections": [
            {"leg": leg, "row": row, "param": name, **coeffs(c)}
            for (leg, row, name), c in sorted(model.dh_corrections.items(),
                                              key=lambda kv: (kv[0][0], kv[0][1],
                                                              DH_PARAMS.index(kv[0][2])))
        ],
        "pose_corrections": {name: coeffs(model.pose_corrections[name])
                             for name in POSE_FIELDS if name in model.pose_corrections},
    }
    return yaml.safe_dump(doc, sort_keys=False)


def model_from_text(text: str) -> CompensationModel:
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict) or "option" not in doc:
        raise ValueError("not a compensation model file")

    def corr(d):
        return AffineCorrection(float(d["slope"]), float(d["intercept"]),
                                bool(d.get("degenerate", False)))

    dh = {(int(e["leg"]), int(e["row"]), str(e["param"])): corr(e)
          for e in doc.get("dh_corrections") or []}
    pose = {str(k): corr(v) for k, v in (doc.get("pose_corrections") or {}).items()}
    return CompensationModel(int(doc["option"]), dh, pose)
