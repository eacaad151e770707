"""Tests for quaternion algebra, the exp/log chart and Euler conversions."""

import sys
from pathlib import Path

import numpy as np
from numpy.testing import assert_allclose

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))


def _random_quats(n, seed=0):
    rng = np.random.default_rng(seed)
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def test_dcm_matches_sandwich_product():
    """R(q) d equals the vector part of q ⊗ [0, d] ⊗ q*."""
    from core.rotation import pure, quat_conj, quat_product, quat_to_dcm

    q = _random_quats(20)
    d = np.random.default_rng(1).normal(size=(20, 3))
    sandwich = quat_product(quat_product(q, pure(d)), quat_conj(q))[..., 1:]
    rotated = np.einsum("nij,nj->ni", quat_to_dcm(q), d)
    assert_allclose(rotated, sandwich, atol=1e-12)


def test_dcm_is_orthonormal():
    """Rotation matrices are orthonormal with determinant one."""
    from core.rotation import quat_to_dcm

    R = quat_to_dcm(_random_quats(50))
    eye = np.broadcast_to(np.eye(3), R.shape)
    assert_allclose(np.einsum("nji,njk->nik", R, R), eye, atol=1e-12)
    assert_allclose(np.linalg.det(R), 1.0, atol=1e-12)


def test_quat_mul_composes_rotations():
    """R(q1 ⊗ q2) = R(q1) R(q2)."""
    from core.rotation import quat_mul, quat_to_dcm

    q1, q2 = _random_quats(10, 2), _random_quats(10, 3)
    assert_allclose(quat_to_dcm(quat_mul(q1, q2)), quat_to_dcm(q1) @ quat_to_dcm(q2), atol=1e-12)


def test_exp_log_inverse():
    """log(exp(φ)) = φ for ||φ|| < π, including tiny angles."""
    from core.rotation import quat_to_rotvec, rotvec_to_quat

    rng = np.random.default_rng(4)
    axes = rng.normal(size=(30, 3))
    axes /= np.linalg.norm(axes, axis=-1, keepdims=True)
    angles = np.concatenate([rng.uniform(0.0, 3.0, 25), [1e-12, 1e-9, 1e-6, 1e-3, 0.0]])
    phi = axes * angles[:, None]
    assert_allclose(quat_to_rotvec(rotvec_to_quat(phi)), phi, atol=1e-12)


def test_log_is_canonical():
    """q and -q map to the same rotation vector."""
    from core.rotation import quat_to_rotvec

    q = _random_quats(10, 5)
    assert_allclose(quat_to_rotvec(q), quat_to_rotvec(-q), atol=1e-12)
    assert np.all(np.linalg.norm(quat_to_rotvec(q), axis=-1) <= np.pi + 1e-12)


def test_quat_angle():
    """quat_angle returns the relative rotation angle."""
    from core.rotation import IDENTITY_QUAT, quat_angle, rotvec_to_quat

    q = rotvec_to_quat(np.array([0.0, 0.0, 0.3]))
    assert_allclose(quat_angle(q, IDENTITY_QUAT), 0.3, atol=1e-12)
    assert_allclose(quat_angle(q, q), 0.0, atol=1e-12)


def test_euler_round_trip():
    """ZYX Euler angles survive a trip through the quaternion."""
    from core.rotation import euler_to_quat, quat_to_euler

    rng = np.random.default_rng(6)
    yaw = rng.uniform(-3.0, 3.0, 20)
    pitch = rng.uniform(-1.4, 1.4, 20)
    roll = rng.uniform(-3.0, 3.0, 20)
    out = quat_to_euler(euler_to_quat(yaw, pitch, roll))
    assert_allclose(out, np.stack([roll, pitch, yaw], axis=-1), atol=1e-10)


def test_skew_is_cross_product():
    """skew(v) w = v × w."""
    from core.rotation import skew

    rng = np.random.default_rng(7)
    v, w = rng.normal(size=3), rng.normal(size=3)
    assert_allclose(skew(v) @ w, np.cross(v, w), atol=1e-14)
    assert_allclose(skew(v), -skew(v).T)


def test_euler_rates_to_body_matches_finite_difference():
    """Body rate from Euler rates agrees with log(q(t)⁻¹ q(t+h)) / h."""
    from core.rotation import euler_rates_to_body, euler_to_quat, quat_conj, quat_mul, quat_to_rotvec

    angles = np.array([0.4, -0.3, 0.7])         # yaw, pitch, roll
    rates = np.array([0.5, 0.2, -0.8])
    h = 1e-6
    q0 = euler_to_quat(*(angles - 0.5 * h * rates))
    q1 = euler_to_quat(*(angles + 0.5 * h * rates))
    numeric = quat_to_rotvec(quat_mul(quat_conj(q0), q1)) / h
    assert_allclose(euler_rates_to_body(angles, rates), numeric, atol=1e-6)


def test_unit_quaternion_value_type():
    """UnitQuaternion normalizes, composes and inverts."""
    from core.rotation import UnitQuaternion

    q = UnitQuaternion.from_array(np.array([2.0, 0.0, 0.0, 2.0]))
    assert abs(np.linalg.norm(q.array) - 1.0) < 1e-12
    assert_allclose((q * q.inverse()).array, [1.0, 0.0, 0.0, 0.0], atol=1e-12)
    assert_allclose(q.rotate([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)
    assert_allclose(UnitQuaternion.from_rotvec(q.rotvec()).array, q.array, atol=1e-12)
    assert_allclose(UnitQuaternion.from_array(-q.array).canonical().array, q.canonical().array, atol=1e-12)
