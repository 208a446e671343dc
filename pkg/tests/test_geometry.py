import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hexcal.errors import GimbalLock
from hexcal.geometry import (HOME, PoseVector, RigidTransform, grip_to_platform,
                             pose_to_transform, transform_to_pose, wrap_deg)

from conftest import random_pose


def _rx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


def _ry(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def _rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def _homogeneous(rot=np.eye(3), trans=(0, 0, 0)):
    m = np.eye(4)
    m[:3, :3] = rot
    m[:3, 3] = trans
    return m


def test_home_pose_is_identity():
    t = pose_to_transform(HOME)
    assert np.array_equal(t.rotation, np.eye(3))
    assert np.array_equal(t.translation, np.zeros(3))


def test_quarter_turn_about_x():
    r = pose_to_transform(PoseVector(alpha=90)).rotation
    np.testing.assert_allclose(r @ [0, 1, 0], [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(r @ [0, 0, 1], [0, -1, 0], atol=1e-15)


def test_rotation_matches_elementary_product():
    t = pose_to_transform(PoseVector(1, 2, 3, 10, 20, 30))
    oracle = _rz(math.radians(30)) @ _ry(math.radians(20)) @ _rx(math.radians(10))
    np.testing.assert_allclose(t.rotation, oracle, atol=1e-15)
    np.testing.assert_array_equal(t.translation, [1, 2, 3])


def test_identity_decomposes_to_home():
    assert transform_to_pose(RigidTransform.identity()) == HOME


def test_round_trip_random_poses():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p = PoseVector(*rng.uniform(-500, 500, 3), rng.uniform(-180, 180),
                       rng.uniform(-85, 85), rng.uniform(-180, 180))
        q = transform_to_pose(pose_to_transform(p))
        np.testing.assert_allclose(q.as_array(), p.as_array(), atol=1e-9)


def test_gimbal_lock_is_reported():
    with pytest.raises(GimbalLock):
        transform_to_pose(pose_to_transform(PoseVector(beta=90)))


def test_transform_rejects_improper_rotation():
    with pytest.raises(ValueError):
        RigidTransform(np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_composition_stays_orthonormal(rng):
    t = RigidTransform.identity()
    for _ in range(200):
        t = t @ pose_to_transform(PoseVector(*rng.uniform(-10, 10, 3), *rng.uniform(-180, 180, 3)))
    np.testing.assert_allclose(t.rotation.T @ t.rotation, np.eye(3), atol=1e-9)
    np.testing.assert_allclose(t.inverse().compose(t).matrix(), np.eye(4), atol=1e-9)


def test_platform_sits_fd_below_grip_at_home(geom):
    t = grip_to_platform(HOME, geom)
    np.testing.assert_array_equal(t.rotation, np.eye(3))
    np.testing.assert_allclose(t.translation,
                               geom.ug_offset - [0, 0, geom.gd_home + geom.fd], atol=1e-12)


def test_pure_z_translation_moves_platform_equally(geom):
    home = grip_to_platform(HOME, geom).translation
    moved = grip_to_platform(PoseVector(z=12.5), geom).translation
    np.testing.assert_allclose(moved - home, [0, 0, 12.5], atol=1e-12)


def test_rolled_grip_matches_explicit_matrix_chain(geom):
    pose = PoseVector(3, -4, 5, 30, 0, 0)
    lg_home = geom.ug_offset - [0, 0, geom.gd_home]
    oracle = (_homogeneous(trans=lg_home + [3, -4, 5])
              @ _homogeneous(rot=_rx(math.radians(30)))
              @ _homogeneous(trans=[0, 0, -geom.fd]))
    np.testing.assert_allclose(grip_to_platform(pose, geom).matrix(), oracle, atol=1e-12)


@given(st.floats(-1e4, 1e4, allow_nan=False))
def test_wrap_lands_in_half_open_interval(angle):
    w = wrap_deg(angle)
    assert -180 < w <= 180
    assert math.isclose(math.cos(math.radians(w)), math.cos(math.radians(angle)), abs_tol=1e-9)


def test_pose_angles_are_normalized():
    p = PoseVector(alpha=190, beta=-180, gamma=540)
    assert (p.alpha, p.beta, p.gamma) == (-170, 180, 180)


def test_pose_rejects_non_finite():
    with pytest.raises(ValueError):
        PoseVector(x=float("nan"))


def test_random_pose_helper_stays_in_bounds(geom, rng):
    for _ in range(50):
        assert geom.pose_bounds.contains(random_pose(rng, geom))
