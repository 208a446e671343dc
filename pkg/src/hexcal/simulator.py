"""Seeded stand-in for the photogrammetry rig.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence(seed,
spawn_key=(stream, index))``. Every pose gets its own substream keyed by its
position in the sequence, so a dataset is identical whether the poses are
simulated sequentially or on a thread pool.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .calibration import CalibrationDataset, PoseObservation
from .errors import ExhaustedSampling, InvalidatedGeometry, NoConvergence, SingularJacobian
from .geometry import HOME, PlatformGeometry, PoseVector
from .kinematics import forward_kinematics, inverse_kinematics, is_near_singular, leg_lengths

log = logging.getLogger(__name__)

POSE_STREAM = 1
GEOMETRY_STREAM = 2
MEASUREMENT_STREAM = 3
VERIFY_STREAM = 4

# Commanded poses are quantized to the controller resolution (1e-6 mm / deg).
COMMAND_DECIMALS = 6
SAMPLING_BUDGET_PER_POSE = 1000
DEFAULT_POSITION_SIGMA = 0.14  # 3 sigma ~ 0.425 mm, i.e. 5 px at 300 dpi
DEFAULT_ORIENTATION_SIGMA = 0.05


def make_rng(seed: int, *key: int) -> np.random.Generator:
    entropy = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=key)))


@dataclass(frozen=True)
class PerturbationSpec:
    joint_position_noise: float = 0.0
    leg_offset_bias: tuple[float, ...] = (0.0,) * 6
    seed: int = 0

    def __post_init__(self):
        bias = self.leg_offset_bias
        if np.ndim(bias) == 0:
            bias = (float(bias),) * 6
        bias = tuple(float(b) for b in bias)
        if len(bias) != 6 or not all(math.isfinite(b) for b in bias):
            raise ValueError("leg_offset_bias needs 6 finite values")
        if not (math.isfinite(self.joint_position_noise) and self.joint_position_noise >= 0):
            raise ValueError("joint_position_noise must be >= 0")
        object.__setattr__(self, "leg_offset_bias", bias)
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class NoiseSpec:
    position_sigma: float = DEFAULT_POSITION_SIGMA
    orientation_sigma: float = DEFAULT_ORIENTATION_SIGMA
    seed: int = 0

    def __post_init__(self):
        for name in ("position_sigma", "orientation_sigma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be >= 0")
        object.__setattr__(self, "seed", int(self.seed))


NO_NOISE = NoiseSpec(0.0, 0.0, 0)


def _admissible(pose: PoseVector, geom: PlatformGeometry) -> bool:
    if not inverse_kinematics(pose, geom).valid:
        return False
    return not is_near_singular(pose, geom)


def generate_random_poses(n: int, geom: PlatformGeometry, seed: int) -> list[PoseVector]:
    """``n`` uniform poses inside ``pose_bounds``, IK-valid and clear of singularities."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed, POSE_STREAM)
    lower = np.array(geom.pose_bounds.lower)
    upper = np.array(geom.pose_bounds.upper)
    poses: list[PoseVector] = []
    budget = SAMPLING_BUDGET_PER_POSE * n
    for _ in range(budget):
        sample = np.clip(np.round(rng.uniform(lower, upper), COMMAND_DECIMALS), lower, upper)
        pose = PoseVector.from_array(sample)
        if _admissible(pose, geom):
            poses.append(pose)
            if len(poses) == n:
                return poses
    raise ExhaustedSampling(
        f"only {len(poses)} of {n} admissible poses after {budget} draws; bounds too tight?")


def perturb_geometry(geom: PlatformGeometry, spec: PerturbationSpec) -> PlatformGeometry:
    """A "true" geometry: joints displaced uniformly within +-noise, leg biases attached."""
    base = geom.base_joints
    plat = geom.platform_joints
    if spec.joint_position_noise > 0:
        rng = make_rng(spec.seed, GEOMETRY_STREAM)
        e = spec.joint_position_noise
        base = base + rng.uniform(-e, e, size=(6, 3))
        plat = plat + rng.uniform(-e, e, size=(6, 3))
    bias = np.asarray(spec.leg_offset_bias, dtype=float)
    if spec.joint_position_noise == 0 and not np.any(bias):
        return geom
    try:
        return geom.with_changes(base_joints=base, platform_joints=plat,
                                 leg_bias=geom.leg_bias + bias)
    except ValueError as exc:
        raise InvalidatedGeometry(str(exc)) from exc


def reach(legs, truth: PlatformGeometry, guess: PoseVector) -> PoseVector:
    """Pose the truth machine settles in for given actuator lengths."""
    try:
        return forward_kinematics(legs, truth, guess=guess)
    except (NoConvergence, SingularJacobian):
        if guess == HOME:
            raise
        log.debug("FK from target guess failed; retrying from home")
        return forward_kinematics(legs, truth, guess=HOME)


def simulate_measurement(target: PoseVector, nominal: PlatformGeometry, truth: PlatformGeometry,
                         noise: NoiseSpec, index: int = 0,
                         stream: int = MEASUREMENT_STREAM) -> PoseVector:
    """Command ``target`` on the nominal model, let the truth machine move, measure with noise.

    ``index`` selects the random substream; use the pose's position in its
    sequence so that results do not depend on evaluation order.
    """
    legs = leg_lengths(target, nominal) + truth.leg_bias
    reached = reach(legs, truth, guess=target)
    if noise.position_sigma == 0 and noise.orientation_sigma == 0:
        return reached
    rng = make_rng(noise.seed, stream, int(index))
    delta = np.concatenate([rng.normal(0.0, noise.position_sigma, 3),
                            rng.normal(0.0, noise.orientation_sigma, 3)])
    return PoseVector.from_array(reached.as_array() + delta)


def build_dataset(targets, nominal: PlatformGeometry, truth: PlatformGeometry,
                  noise: NoiseSpec, workers: int = 1,
                  stream: int = MEASUREMENT_STREAM, pose_ids=None) -> CalibrationDataset:
    """One observation per target; FK failures become ``unreachable`` exclusions."""
    targets = list(targets)
    ids = list(range(1, len(targets) + 1)) if pose_ids is None else [int(i) for i in pose_ids]

    def one(item):
        pose_id, target = item
        try:
            return simulate_measurement(target, nominal, truth, noise, pose_id, stream), None
        except (NoConvergence, SingularJacobian) as exc:
            return None, str(exc)

    items = list(zip(ids, targets))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, items))
    else:
        results = [one(item) for item in items]

    observations = []
    excluded = {}
    for (pose_id, target), (measured, failure) in zip(items, results):
        observations.append(PoseObservation(pose_id, target, measured))
        if failure is not None:
            log.warning("pose %d unreachable on truth geometry: %s", pose_id, failure)
            excluded[pose_id] = "unreachable"
    return CalibrationDataset(observations, excluded)
