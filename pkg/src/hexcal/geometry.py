"""Pose vectors, rigid transforms and the platform frame chain.

Frames: ``O_B`` fixed base, ``O_UG`` fixed upper grip, ``O_LG`` moving lower
grip, ``O_P`` moving platform center. All frame axes are parallel at home.
The lower grip sits ``gd_home`` below the upper grip at home, and the platform
center sits ``fd`` below the lower grip along the platform z axis.

Angles are degrees at every public boundary. Rotations use fixed-axis
roll-pitch-yaw, ``R = Rz(gamma) @ Ry(beta) @ Rx(alpha)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import GimbalLock

POSE_FIELDS = ("x", "y", "z", "alpha", "beta", "gamma")
ORTHONORMAL_TOL = 1e-9


def wrap_deg(angle):
    """Map an angle (or array of angles) in degrees onto (-180, 180]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + 180.0, 360.0) - 180.0
    wrapped = np.where(wrapped == -180.0, 180.0, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class PoseVector:
    """Lower-grip-center pose relative to home: mm and degrees."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in POSE_FIELDS:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"pose field {name} is not finite: {value}")
            if name in ("alpha", "beta", "gamma"):
                value = wrap_deg(value)
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values) -> "PoseVector":
        values = np.asarray(values, dtype=float).reshape(6)
        return cls(*(float(v) for v in values))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.alpha, self.beta, self.gamma])

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def orientation(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])


HOME = PoseVector()


def rot_x(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rpy_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    return rot_z(gamma) @ rot_y(beta) @ rot_x(alpha)


def rpy_angles(rotation: np.ndarray) -> tuple[float, float, float]:
    """Invert :func:`rpy_matrix`. Raises GimbalLock when |cos(beta)| < 1e-9."""
    r = np.asarray(rotation, dtype=float)
    cos_beta = math.hypot(r[0, 0], r[1, 0])
    if cos_beta < 1e-9:
        raise GimbalLock("pitch at +/-90 deg; roll and yaw are not separable")
    beta = math.atan2(-r[2, 0], cos_beta)
    alpha = math.atan2(r[2, 1], r[2, 2])
    gamma = math.atan2(r[1, 0], r[0, 0])
    return (wrap_deg(math.degrees(alpha)), wrap_deg(math.degrees(beta)),
            wrap_deg(math.degrees(gamma)))


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float).reshape(3, 3)
        trans = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(trans))):
            raise ValueError("transform entries must be finite")
        if (np.max(np.abs(rot.T @ rot - np.eye(3))) > ORTHONORMAL_TOL
                or abs(np.linalg.det(rot) - 1.0) > ORTHONORMAL_TOL):
            raise ValueError("rotation is not a proper orthonormal matrix")
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_matrix(cls, matrix) -> "RigidTransform":
        m = np.asarray(matrix, dtype=float)
        return cls(m[:3, :3], m[:3, 3])

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    __matmul__ = compose

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def apply(self, points) -> np.ndarray:
        """Map points (shape (3,) or (n, 3)) through the transform."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T + self.translation


def pose_to_transform(pose: PoseVector) -> RigidTransform:
    return RigidTransform(rpy_matrix(pose.alpha, pose.beta, pose.gamma), pose.position)


def transform_to_pose(t: RigidTransform) -> PoseVector:
    alpha, beta, gamma = rpy_angles(t.rotation)
    x, y, z = (float(v) for v in t.translation)
    return PoseVector(x, y, z, alpha, beta, gamma)


@dataclass(frozen=True)
class PoseBounds:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != 6 or len(hi) != 6:
            raise ValueError("pose bounds need six (min, max) pairs")
        for name, a, b in zip(POSE_FIELDS, lo, hi):
            if not (math.isfinite(a) and math.isfinite(b)) or a > b:
                raise ValueError(f"invalid bounds for {name}: [{a}, {b}]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    def violations(self, pose: PoseVector) -> list[str]:
        out = []
        for name, value, lo, hi in zip(POSE_FIELDS, pose.as_array(), self.lower, self.upper):
            if value < lo:
                out.append(f"{name} below bound")
            elif value > hi:
                out.append(f"{name} above bound")
        return out

    def contains(self, pose: PoseVector) -> bool:
        return not self.violations(pose)


@dataclass(frozen=True)
class PlatformGeometry:
    """Joint layout, actuator limits and frame offsets of a 6-UPS platform.

    ``leg_bias`` is the per-actuator length offset a physical machine adds to
    every commanded length. It is zero for nominal geometries and is only set
    on simulator "truth" geometries.
    """

    base_joints: np.ndarray
    platform_joints: np.ndarray
    leg_min: float
    leg_max: float
    fd: float
    gd_home: float
    ug_offset: np.ndarray
    pose_bounds: PoseBounds
    singularity_tol: float = 1e-8
    leg_bias: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        base = np.array(self.base_joints, dtype=float)
        plat = np.array(self.platform_joints, dtype=float)
        if base.shape != (6, 3) or plat.shape != (6, 3):
            raise ValueError("need exactly 6 base joints and 6 platform joints, each a 3-vector")
        ug = np.array(self.ug_offset, dtype=float).reshape(3)
        bias = np.array(self.leg_bias, dtype=float).reshape(6)
        for arr in (base, plat, ug, bias):
            if not np.all(np.isfinite(arr)):
                raise ValueError("geometry entries must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "base_joints", base)
        object.__setattr__(self, "platform_joints", plat)
        object.__setattr__(self, "ug_offset", ug)
        object.__setattr__(self, "leg_bias", bias)
        if not 0 < self.leg_min < self.leg_max:
            raise ValueError(f"need 0 < leg_min < leg_max, got {self.leg_min}, {self.leg_max}")
        if self.fd < 0:
            raise ValueError("fd must be >= 0")
        if self.gd_home <= 0:
            raise ValueError("gd_home must be > 0")
        if not self.singularity_tol > 0:
            raise ValueError("singularity_tol must be > 0")
        home_legs = np.linalg.norm(self.platform_joints_in_grip() + self.grip_home() - base, axis=1)
        if np.any(home_legs < self.leg_min) or np.any(home_legs > self.leg_max):
            raise ValueError(
                f"home leg lengths {np.round(home_legs, 3).tolist()} outside "
                f"[{self.leg_min}, {self.leg_max}]")

    def grip_home(self) -> np.ndarray:
        """Position of O_LG at the home pose, in base coordinates."""
        return self.ug_offset - np.array([0.0, 0.0, self.gd_home])

    def platform_joints_in_grip(self) -> np.ndarray:
        """Spherical-joint centers expressed in the lower-grip frame."""
        return self.platform_joints - np.array([0.0, 0.0, self.fd])

    def with_changes(self, **changes) -> "PlatformGeometry":
        return replace(self, **changes)


def grip_transform(pose: PoseVector, geom: PlatformGeometry) -> RigidTransform:
    """O_B -> O_LG for a pose measured from the lower grip's home location."""
    return RigidTransform(rpy_matrix(pose.alpha, pose.beta, pose.gamma),
                          geom.grip_home() + pose.position)


def platform_offset(geom: PlatformGeometry) -> RigidTransform:
    """O_LG -> O_P, a pure shift of ``fd`` along -z of the grip frame."""
    return RigidTransform(np.eye(3), np.array([0.0, 0.0, -geom.fd]))


def grip_to_platform(pose_lg: PoseVector, geom: PlatformGeometry) -> RigidTransform:
    """O_B -> O_P implied by a lower-grip pose."""
    return grip_transform(pose_lg, geom) @ platform_offset(geom)


def grip_pose_from_transform(t_grip: RigidTransform, geom: PlatformGeometry) -> PoseVector:
    """Inverse of :func:`grip_transform`."""
    alpha, beta, gamma = rpy_angles(t_grip.rotation)
    x, y, z = (float(v) for v in t_grip.translation - geom.grip_home())
    return PoseVector(x, y, z, alpha, beta, gamma)
