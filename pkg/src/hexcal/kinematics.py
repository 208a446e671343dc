"""Inverse/forward kinematics, leg-length Jacobian and singularity test."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, SingularJacobian
from .geometry import HOME, PlatformGeometry, PoseVector, rot_x, rot_y, rot_z

DEG = math.pi / 180.0

FK_MAX_ITER = 100
FK_TOL_MM = 1e-9
FK_MAX_HALVINGS = 20
NEAR_SINGULAR_FACTOR = 10.0


@dataclass(frozen=True)
class LegLengths:
    lengths: np.ndarray
    valid: bool

    def __post_init__(self):
        arr = np.array(self.lengths, dtype=float).reshape(6)
        arr.setflags(write=False)
        object.__setattr__(self, "lengths", arr)

    def __iter__(self):
        return iter(self.lengths)


def _leg_vectors(pose: PoseVector, geom: PlatformGeometry):
    rot = rot_z(pose.gamma) @ rot_y(pose.beta) @ rot_x(pose.alpha)
    joints = geom.platform_joints_in_grip()
    center = geom.grip_home() + pose.position
    return joints @ rot.T + center - geom.base_joints


def leg_lengths(pose: PoseVector, geom: PlatformGeometry) -> np.ndarray:
    """Raw leg-length array, without the validity bookkeeping."""
    return np.linalg.norm(_leg_vectors(pose, geom), axis=1)


def inverse_kinematics(pose: PoseVector, geom: PlatformGeometry) -> LegLengths:
    lengths = leg_lengths(pose, geom)
    valid = bool(np.all(lengths >= geom.leg_min) and np.all(lengths <= geom.leg_max))
    return LegLengths(lengths, valid)


def leg_violations(lengths, geom: PlatformGeometry) -> list[str]:
    out = []
    for i, length in enumerate(np.asarray(lengths, dtype=float)):
        if length < geom.leg_min:
            out.append(f"leg {i} under-extended")
        elif length > geom.leg_max:
            out.append(f"leg {i} over-extended")
    return out


def jacobian(pose: PoseVector, geom: PlatformGeometry) -> np.ndarray:
    """d(leg length)/d(pose); rows are legs, columns (x, y, z, alpha, beta, gamma).

    Translational columns are dimensionless, rotational ones mm/deg.
    """
    rx, ry, rz = rot_x(pose.alpha), rot_y(pose.beta), rot_z(pose.gamma)
    a, b, g = pose.alpha * DEG, pose.beta * DEG, pose.gamma * DEG
    drx = np.array([[0.0, 0.0, 0.0],
                    [0.0, -math.sin(a), -math.cos(a)],
                    [0.0, math.cos(a), -math.sin(a)]])
    dry = np.array([[-math.sin(b), 0.0, math.cos(b)],
                    [0.0, 0.0, 0.0],
                    [-math.cos(b), 0.0, -math.sin(b)]])
    drz = np.array([[-math.sin(g), -math.cos(g), 0.0],
                    [math.cos(g), -math.sin(g), 0.0],
                    [0.0, 0.0, 0.0]])
    joints = geom.platform_joints_in_grip()
    legs = _leg_vectors(pose, geom)
    units = legs / np.linalg.norm(legs, axis=1)[:, None]

    jac = np.empty((6, 6))
    jac[:, :3] = units
    for col, d_rot in ((3, rz @ ry @ drx), (4, rz @ dry @ rx), (5, drz @ ry @ rx)):
        jac[:, col] = np.einsum("ij,ij->i", units, joints @ d_rot.T) * DEG
    return jac


def normalized_determinant(pose: PoseVector, geom: PlatformGeometry) -> float:
    """|det J| divided by the product of J's row norms; lies in [0, 1]."""
    jac = jacobian(pose, geom)
    scale = float(np.prod(np.linalg.norm(jac, axis=1)))
    if scale == 0.0:
        return 0.0
    return abs(float(np.linalg.det(jac))) / scale


def is_singular(pose: PoseVector, geom: PlatformGeometry) -> bool:
    return normalized_determinant(pose, geom) < geom.singularity_tol


def is_near_singular(pose: PoseVector, geom: PlatformGeometry,
                     factor: float = NEAR_SINGULAR_FACTOR) -> bool:
    return normalized_determinant(pose, geom) < factor * geom.singularity_tol


def forward_kinematics(legs, geom: PlatformGeometry, guess: PoseVector = HOME,
                       max_iter: int = FK_MAX_ITER, tol: float = FK_TOL_MM) -> PoseVector:
    """Damped Newton-Raphson on ``leg_lengths(pose) - legs`` seeded at ``guess``.

    Each full Newton step is halved (at most 20 times) until the max-norm
    residual decreases; a step that cannot decrease it ends the solve.
    """
    target = np.asarray(getattr(legs, "lengths", legs), dtype=float).reshape(6)
    x = guess.as_array()
    residual = leg_lengths(PoseVector.from_array(x), geom) - target
    err = float(np.max(np.abs(residual)))
    for it in range(max_iter):
        if err < tol:
            return PoseVector.from_array(x)
        jac = jacobian(PoseVector.from_array(x), geom)
        try:
            step = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"Newton step unsolvable at iterate {it}: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian(f"Newton step not finite at iterate {it}")
        scale = 1.0
        for _ in range(FK_MAX_HALVINGS + 1):
            trial = x + scale * step
            trial_res = leg_lengths(PoseVector.from_array(trial), geom) - target
            trial_err = float(np.max(np.abs(trial_res)))
            if trial_err < err:
                break
            scale *= 0.5
        else:
            raise NoConvergence("damped Newton step failed to reduce the residual",
                                residual=err, iterations=it)
        x, residual, err = trial, trial_res, trial_err
    if err < tol:
        return PoseVector.from_array(x)
    raise NoConvergence("iteration budget exhausted", residual=err, iterations=max_iter)
