"""Modified Denavit-Hartenberg chains along each UPS actuator path.

Each leg is a six-joint serial chain from ``O_B`` to ``O_LG``:

    row 0  revolute   universal joint, about the base x axis
    row 1  revolute   universal joint, about the rotated y axis
    row 2  prismatic  actuator, along the leg
    row 3  revolute   spherical joint, z
    row 4  revolute   spherical joint, y
    row 5  revolute   spherical joint, x

A row ``(theta, d, a, alpha_link)`` is the modified (proximal) transform
``RotX(alpha_link) @ TransX(a) @ RotZ(theta) @ TransZ(d)``. All joint axes of
a leg intersect at its joint centers, so every ``a`` is zero and the link
twists are fixed at (0, -90, 90, 0, -90, 90). The base anchor puts frame 0 at
the base joint with z along base x; the tool anchor maps the last joint frame
to the lower grip center.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularPose
from .geometry import (PlatformGeometry, PoseVector, RigidTransform, grip_transform,
                       rot_x, rot_y, rot_z, wrap_deg)

LINK_TWISTS = (0.0, -90.0, 90.0, 0.0, -90.0, 90.0)
PRISMATIC_ROW = 2
DH_PARAMS = ("theta", "d", "a", "alpha_link")
DEGENERATE_COS = 1e-9


@dataclass(frozen=True)
class DHRow:
    theta: float
    d: float
    a: float
    alpha_link: float

    def __post_init__(self):
        for name in DH_PARAMS:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"DH {name} is not finite")
            if name in ("theta", "alpha_link"):
                value = wrap_deg(value)
            object.__setattr__(self, name, value)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.theta, self.d, self.a, self.alpha_link)

    def matrix(self) -> np.ndarray:
        ct, st = math.cos(math.radians(self.theta)), math.sin(math.radians(self.theta))
        ca, sa = math.cos(math.radians(self.alpha_link)), math.sin(math.radians(self.alpha_link))
        return np.array([
            [ct, -st, 0.0, self.a],
            [st * ca, ct * ca, -sa, -sa * self.d],
            [st * sa, ct * sa, ca, ca * self.d],
            [0.0, 0.0, 0.0, 1.0],
        ])


@dataclass(frozen=True)
class DHChain:
    leg_index: int
    rows: tuple[DHRow, ...]
    base_anchor: RigidTransform
    tool_anchor: RigidTransform

    def __post_init__(self):
        if not 0 <= self.leg_index <= 5:
            raise ValueError("leg_index must be in 0..5")
        if len(self.rows) != 6:
            raise ValueError("a UPS chain has exactly 6 rows")
        object.__setattr__(self, "rows", tuple(self.rows))

    def params(self) -> np.ndarray:
        """(6, 4) array of (theta, d, a, alpha_link) per row."""
        return np.array([row.as_tuple() for row in self.rows])

    def with_params(self, params) -> "DHChain":
        rows = tuple(DHRow(*map(float, p)) for p in np.asarray(params, dtype=float))
        return DHChain(self.leg_index, rows, self.base_anchor, self.tool_anchor)


def base_anchor(geom: PlatformGeometry, leg: int) -> RigidTransform:
    return RigidTransform(rot_y(90.0), geom.base_joints[leg])


def tool_anchor(geom: PlatformGeometry, leg: int) -> RigidTransform:
    rot = rot_y(-90.0)
    offset = np.array([0.0, 0.0, geom.fd]) - geom.platform_joints[leg]
    return RigidTransform(rot, rot @ offset)


def chain_forward(chain: DHChain) -> RigidTransform:
    m = chain.base_anchor.matrix()
    for row in chain.rows:
        m = m @ row.matrix()
    return RigidTransform.from_matrix(m @ chain.tool_anchor.matrix())


def extract_dh_chain(pose: PoseVector, geom: PlatformGeometry, leg: int) -> DHChain:
    """DH chain of one actuator path for a platform pose."""
    if not 0 <= leg <= 5:
        raise ValueError("leg must be in 0..5")
    t_grip = grip_transform(pose, geom)
    joint = t_grip.apply(geom.platform_joints_in_grip()[leg])
    leg_vec = joint - geom.base_joints[leg]
    length = float(np.linalg.norm(leg_vec))
    if length == 0.0:
        raise SingularPose(f"leg {leg} has zero length")
    u = leg_vec / length

    # u = Rx(t1) @ Ry(t2) @ z
    cos_t2 = math.hypot(u[1], u[2])
    if cos_t2 < DEGENERATE_COS:
        raise SingularPose(f"leg {leg} lies along the universal joint's first axis")
    t2 = math.degrees(math.atan2(u[0], cos_t2))
    t1 = math.degrees(math.atan2(-u[1], u[2]))

    # remaining rotation (leg frame -> platform) split as Rz(t4) @ Ry(t5) @ Rx(t6)
    rel = (rot_x(t1) @ rot_y(t2)).T @ t_grip.rotation
    cos_t5 = math.hypot(rel[0, 0], rel[1, 0])
    if cos_t5 < DEGENERATE_COS:
        raise SingularPose(f"spherical joint of leg {leg} is at gimbal lock")
    t5 = math.degrees(math.atan2(-rel[2, 0], cos_t5))
    t4 = math.degrees(math.atan2(rel[1, 0], rel[0, 0]))
    t6 = math.degrees(math.atan2(rel[2, 1], rel[2, 2]))

    thetas = (t1, t2 - 90.0, 0.0, t4, t5 + 90.0, t6)
    ds = (0.0, 0.0, length, 0.0, 0.0, 0.0)
    rows = tuple(DHRow(th, d, 0.0, tw) for th, d, tw in zip(thetas, ds, LINK_TWISTS))
    return DHChain(leg, rows, base_anchor(geom, leg), tool_anchor(geom, leg))


def extract_all_chains(pose: PoseVector, geom: PlatformGeometry) -> list[DHChain]:
    return [extract_dh_chain(pose, geom, leg) for leg in range(6)]


def unify_positions(positions) -> np.ndarray:
    """Component-wise mean of the six per-leg position estimates."""
    pts = np.asarray(positions, dtype=float)
    if pts.shape != (6, 3):
        raise ValueError(f"expected 6 position vectors, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("positions must be finite")
    return pts.sum(axis=0) / 6.0


def chain_rows_table(pose_id: int, chains) -> list[tuple]:
    """Audit rows ``(pose_id, leg, row_index, theta_deg, d_mm, a_mm, alpha_deg)``."""
    out = []
    for chain in chains:
        for i, row in enumerate(chain.rows):
            out.append((pose_id, chain.leg_index, i, row.theta, row.d, row.a, row.alpha_link))
    return out
