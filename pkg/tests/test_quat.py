"""Quaternion arithmetic, conjugation rotations and the angle conventions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gmsphere.quat import (ImQuaternion, ONE, QI, QJ, QK, Quaternion,
                           ad_rotation, apply_ad, mul, rotation_angle,
                           solve_rotation_mapping)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False)
quat = st.builds(Quaternion, finite, finite, finite, finite)
nonzero_quat = quat.filter(lambda q: q.norm() > 1e-3)


def test_defining_relations():
    assert (mul(QI, QJ) - QK).norm() == 0
    assert (mul(QJ, QK) - QI).norm() == 0
    assert (mul(QK, QI) - QJ).norm() == 0
    q = Quaternion(0.3, -1.2, 0.5, 2.0)
    assert (mul(q, ONE) - q).norm() == 0


def test_product_example():
    got = mul(Quaternion(1, 1, 0, 0), Quaternion(1, 0, 1, 0))
    assert (got - Quaternion(1, 1, 1, 1)).norm() < 1e-15


@given(nonzero_quat, nonzero_quat)
def test_norm_multiplicative(q1, q2):
    assert mul(q1, q2).norm() == pytest.approx(q1.norm() * q2.norm(), rel=1e-12)


@given(quat, quat, quat)
def test_associative(q1, q2, q3):
    lhs = mul(mul(q1, q2), q3)
    rhs = mul(q1, mul(q2, q3))
    scale = max(1.0, q1.norm() * q2.norm() * q3.norm())
    assert (lhs - rhs).norm() <= 1e-12 * scale


def test_conjugation_norm_identity():
    q = Quaternion(0.5, -1.5, 2.0, 0.25)
    prod = mul(q.conjugate(), q)
    assert prod.w == pytest.approx(q.norm2(), rel=1e-14)
    assert prod.im.norm() < 1e-14


# ad_rotation ------------------------------------------------------------------

def test_ad_rotation_examples():
    assert np.allclose(ad_rotation(ONE), np.eye(3))
    assert np.allclose(ad_rotation(QI), np.diag([1.0, -1.0, -1.0]))
    c = math.cos(math.pi / 4)
    R = ad_rotation(Quaternion(c, c, 0, 0))
    expect = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
    assert np.allclose(R, expect, atol=1e-14)


def test_ad_rotation_zero_raises():
    with pytest.raises(ValueError):
        ad_rotation(Quaternion())
    with pytest.raises(ValueError):
        rotation_angle(Quaternion())


def test_ad_rotation_orthogonal_det_one():
    rng = np.random.default_rng(1)
    for _ in range(200):
        q = Quaternion.from_array(rng.standard_normal(4))
        if q.norm() < 1e-3:
            continue
        R = ad_rotation(q)
        assert np.abs(R.T @ R - np.eye(3)).max() < 1e-12
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


@given(nonzero_quat, nonzero_quat)
@settings(max_examples=60)
def test_ad_homomorphism(q1, q2):
    assert np.abs(ad_rotation(mul(q1, q2))
                  - ad_rotation(q1) @ ad_rotation(q2)).max() < 1e-10


@given(nonzero_quat, st.floats(min_value=0.01, max_value=50))
def test_ad_scale_invariant(q, lam):
    assert np.abs(ad_rotation(q.scale(lam)) - ad_rotation(q)).max() < 1e-11
    assert np.abs(ad_rotation(q.scale(-lam)) - ad_rotation(q)).max() < 1e-11


# rotation_angle ---------------------------------------------------------------

def test_rotation_angle_examples():
    assert rotation_angle(ONE) == 0.0
    assert rotation_angle(QI) == pytest.approx(math.pi)
    q = Quaternion(math.cos(math.pi / 6), math.sin(math.pi / 6), 0, 0)
    assert rotation_angle(q) == pytest.approx(math.pi / 3, abs=1e-14)


def test_rotation_angle_inverse_and_axis():
    rng = np.random.default_rng(2)
    for _ in range(300):
        q = Quaternion.from_array(rng.standard_normal(4))
        if q.norm() < 1e-3 or q.im_norm() < 1e-6:
            continue
        assert rotation_angle(q.inverse()) == pytest.approx(rotation_angle(q), abs=1e-12)
        # Im q spans the fixed axis of the rotation
        axis = q.im.to_vec3()
        assert np.abs(ad_rotation(q) @ axis - axis).max() < 1e-10 * max(1, np.abs(axis).max())


def test_angle_halfspace_equivalence():
    # |Im q|/|q| >= 1/2  <=>  angle >= pi/3
    rng = np.random.default_rng(3)
    for _ in range(10000):
        q = Quaternion.from_array(rng.standard_normal(4))
        if q.norm() < 1e-6:
            continue
        lhs = q.im_norm() / q.norm() >= 0.5 - 1e-12
        rhs = rotation_angle(q) >= math.pi / 3 - 1e-12
        assert lhs == rhs


# solve_rotation_mapping ---------------------------------------------------------

def test_solve_rotation_examples():
    x = solve_rotation_mapping(ImQuaternion(1, 0, 0), ImQuaternion(0, 1, 0))
    expect = Quaternion(math.cos(math.pi / 4), 0, 0, math.sin(math.pi / 4))
    assert (x - expect).norm() < 1e-14

    x = solve_rotation_mapping(ImQuaternion(1, 0, 0), ImQuaternion(1, 0, 0))
    assert (x - ONE).norm() < 1e-14


def test_solve_rotation_derived_case():
    y = ImQuaternion(math.sqrt(3) / 2, 0.5, 0)
    u = ImQuaternion(0, -1, 0)
    x = solve_rotation_mapping(y, u)
    assert abs(x.norm() - 1.0) < 1e-14
    assert (apply_ad(x, y) - u).norm() < 1e-12


def test_solve_rotation_random_and_antipodal():
    rng = np.random.default_rng(4)
    for _ in range(500):
        y = ImQuaternion.from_vec3(rng.standard_normal(3))
        if y.norm() < 1e-3:
            continue
        R = ad_rotation(Quaternion.from_array(rng.standard_normal(4) + [2, 0, 0, 0]))
        u = ImQuaternion.from_vec3(R @ y.to_vec3())
        x = solve_rotation_mapping(y, u)
        assert (apply_ad(x, y) - u).norm() < 1e-10 * max(1.0, y.norm())
    # exact antipode takes the deterministic perpendicular axis
    y = ImQuaternion(0, 3, 0)
    x = solve_rotation_mapping(y, ImQuaternion(0, -3, 0))
    assert (x - QI).norm() < 1e-14
    assert (apply_ad(x, y) + y).norm() < 1e-12


def test_solve_rotation_errors():
    with pytest.raises(ValueError):
        solve_rotation_mapping(ImQuaternion(1, 0, 0), ImQuaternion(0, 2, 0))
    with pytest.raises(ValueError):
        solve_rotation_mapping(ImQuaternion(), ImQuaternion())
