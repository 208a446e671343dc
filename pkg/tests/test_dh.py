import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hexcal.dh import (DHChain, DHRow, chain_forward, chain_rows_table, extract_dh_chain,
                       unify_positions)
from hexcal.errors import SingularPose
from hexcal.geometry import HOME, PoseVector, RigidTransform, grip_transform
from hexcal.kinematics import inverse_kinematics

from conftest import random_pose


def _rot_x4(deg):
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[1, 0, 0, 0], [0, c, -s, 0], [0, s, c, 0], [0, 0, 0, 1]], dtype=float)


def _rot_z4(deg):
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, -s, 0, 0], [s, c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], dtype=float)


def _trans4(x=0.0, z=0.0):
    m = np.eye(4)
    m[0, 3], m[2, 3] = x, z
    return m


def _oracle_forward(chain):
    m = chain.base_anchor.matrix()
    for row in chain.rows:
        m = m @ _rot_x4(row.alpha_link) @ _trans4(x=row.a) @ _rot_z4(row.theta) @ _trans4(z=row.d)
    return m @ chain.tool_anchor.matrix()


def test_home_chain_reproduces_home_transform(geom):
    chain = extract_dh_chain(HOME, geom, 0)
    np.testing.assert_allclose(chain_forward(chain).matrix(), grip_transform(HOME, geom).matrix(),
                               atol=1e-9)
    assert chain.rows[2].d == pytest.approx(inverse_kinematics(HOME, geom).lengths[0], rel=1e-14)


def test_round_trip_all_legs(geom, rng):
    for _ in range(30):
        p = random_pose(rng, geom)
        target = grip_transform(p, geom).matrix()
        for leg in range(6):
            out = chain_forward(extract_dh_chain(p, geom, leg)).matrix()
            assert np.linalg.norm(out - target) < 1e-9


def test_prismatic_row_carries_leg_length(geom, rng):
    p = random_pose(rng, geom)
    lengths = inverse_kinematics(p, geom).lengths
    for leg in range(6):
        assert extract_dh_chain(p, geom, leg).rows[2].d == pytest.approx(lengths[leg], rel=1e-13)


def test_z_translation_moves_only_joint_variables(geom):
    for leg in range(6):
        a = extract_dh_chain(HOME, geom, leg).params()
        b = extract_dh_chain(PoseVector(z=20), geom, leg).params()
        np.testing.assert_array_equal(a[:, 2:], b[:, 2:])
        assert b[2, 1] != a[2, 1]
        assert not np.allclose(a[[0, 1, 3, 4, 5], 0], b[[0, 1, 3, 4, 5], 0])
        assert a[2, 0] == b[2, 0] == 0.0


def test_zero_chain_is_identity():
    rows = tuple(DHRow(0, 0, 0, 0) for _ in range(6))
    chain = DHChain(0, rows, RigidTransform.identity(), RigidTransform.identity())
    np.testing.assert_array_equal(chain_forward(chain).matrix(), np.eye(4))


def test_theta_perturbation_matches_matrix_product(geom):
    chain = extract_dh_chain(PoseVector(5, -3, 2, 4, -6, 8), geom, 3)
    for row in (0, 1, 3, 4, 5):
        params = chain.params()
        params[row, 0] += 1.0
        bumped = chain.with_params(params)
        np.testing.assert_allclose(chain_forward(bumped).matrix(), _oracle_forward(bumped),
                                   atol=1e-10)
        assert not np.allclose(chain_forward(bumped).matrix(), chain_forward(chain).matrix())


def test_oracle_agrees_on_unperturbed_chains(geom, rng):
    p = random_pose(rng, geom)
    for leg in range(6):
        chain = extract_dh_chain(p, geom, leg)
        np.testing.assert_allclose(chain_forward(chain).matrix(), _oracle_forward(chain), atol=1e-10)


def test_degenerate_universal_joint_raises(geom):
    # leg 0 laid horizontally along base x: the universal joint's two axes align
    height = geom.ug_offset[2] - geom.gd_home - geom.fd
    base = geom.base_joints.copy()
    base[0] = geom.platform_joints[0] + [-650.0, 0.0, height]
    odd = geom.with_changes(base_joints=base)
    with pytest.raises(SingularPose):
        extract_dh_chain(HOME, odd, 0)
    extract_dh_chain(HOME, odd, 1)


def test_leg_index_checked(geom):
    with pytest.raises(ValueError):
        extract_dh_chain(HOME, geom, 6)


def test_unify_identical_vectors():
    v = np.array([1.5, -2.0, 3.25])
    np.testing.assert_array_equal(unify_positions([v] * 6), v)


def test_unify_symmetric_vectors():
    pts = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    np.testing.assert_array_equal(unify_positions(pts), [0, 0, 0])


def test_unify_matches_summation(rng):
    pts = rng.normal(scale=100, size=(6, 3))
    expected = [sum(p[k] for p in pts) / 6 for k in range(3)]
    np.testing.assert_allclose(unify_positions(pts), expected, rtol=1e-14)


finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(arrays(float, (6, 3), elements=finite), st.permutations(range(6)),
       arrays(float, 3, elements=finite))
def test_unify_permutation_invariant_translation_equivariant(pts, perm, shift):
    base = unify_positions(pts)
    np.testing.assert_allclose(unify_positions(pts[list(perm)]), base, atol=1e-9)
    np.testing.assert_allclose(unify_positions(pts + shift), base + shift, atol=1e-9)


def test_audit_rows(geom):
    chains = [extract_dh_chain(HOME, geom, leg) for leg in range(6)]
    rows = chain_rows_table(7, chains)
    assert len(rows) == 36
    assert rows[2][:3] == (7, 0, 2)
    assert rows[2][4] == chains[0].rows[2].d
