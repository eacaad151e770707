"""
Rotation algebra

Scalar-first unit quaternions, direction cosine matrices and the
rotation-vector chart. Every function broadcasts over leading axes, so a
stack of sigma points (n, 4) goes through the same code as a single
attitude (4,).

Conventions:
    q = [w, x, y, z], Hamilton product, R(q) d = vec(q ⊗ [0, d] ⊗ q*)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this angle the exponential/log maps switch to their series forms
SMALL_ANGLE = 1e-8

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def quat_product(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Raw Hamilton product, no renormalization (valid for pure quaternions too)."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    w1, v1 = q1[..., 0], q1[..., 1:]
    w2, v2 = q2[..., 0], q2[..., 1:]
    w = w1 * w2 - np.sum(v1 * v2, axis=-1)
    v = w1[..., None] * v2 + w2[..., None] * v1 + np.cross(v1, v2)
    return np.concatenate([w[..., None], v], axis=-1)


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_mul(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """q1 ⊗ q2 for unit quaternions, renormalized."""
    return quat_normalize(quat_product(q1, q2))


def quat_conj(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.concatenate([q[..., :1], -q[..., 1:]], axis=-1)


def quat_canonical(q: np.ndarray) -> np.ndarray:
    """Representative with w >= 0 (q and -q are the same rotation)."""
    q = np.asarray(q, dtype=float)
    sign = np.where(q[..., :1] < 0.0, -1.0, 1.0)
    return q * sign


def pure(d: np.ndarray) -> np.ndarray:
    """Quaternion lift [0, d] of a 3-vector."""
    d = np.asarray(d, dtype=float)
    return np.concatenate([np.zeros(d.shape[:-1] + (1,)), d], axis=-1)


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(v) @ w == v x w."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    out[..., 0, 1] = -z
    out[..., 0, 2] = y
    out[..., 1, 0] = z
    out[..., 1, 2] = -x
    out[..., 2, 0] = -y
    out[..., 2, 1] = x
    return out


def quat_to_dcm(q: np.ndarray) -> np.ndarray:
    """Rotation matrix R with R d = vec(q ⊗ [0, d] ⊗ q*)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    R = np.empty(q.shape[:-1] + (3, 3))
    R[..., 0, 0] = w * w + x * x - y * y - z * z
    R[..., 0, 1] = 2.0 * (x * y - w * z)
    R[..., 0, 2] = 2.0 * (x * z + w * y)
    R[..., 1, 0] = 2.0 * (x * y + w * z)
    R[..., 1, 1] = w * w - x * x + y * y - z * z
    R[..., 1, 2] = 2.0 * (y * z - w * x)
    R[..., 2, 0] = 2.0 * (x * z - w * y)
    R[..., 2, 1] = 2.0 * (y * z + w * x)
    R[..., 2, 2] = w * w - x * x - y * y + z * z
    return R


def rotvec_to_quat(phi: np.ndarray) -> np.ndarray:
    """Exponential map. Small angles fall back to (1, phi/2)."""
    phi = np.asarray(phi, dtype=float)
    angle = np.linalg.norm(phi, axis=-1, keepdims=True)
    small = angle < SMALL_ANGLE
    safe = np.where(small, 1.0, angle)
    half = 0.5 * angle
    w = np.where(small, 1.0, np.cos(half))
    v = np.where(small, 0.5 * phi, np.sin(half) * phi / safe)
    return quat_normalize(np.concatenate([w, v], axis=-1))


def quat_to_rotvec(q: np.ndarray) -> np.ndarray:
    """Log map onto the canonical chart, ||phi|| <= pi."""
    q = quat_canonical(quat_normalize(q))
    w = q[..., :1]
    v = q[..., 1:]
    vnorm = np.linalg.norm(v, axis=-1, keepdims=True)
    small = vnorm < SMALL_ANGLE
    # atan2 keeps the near-pi branch (w -> 0) well conditioned
    angle = 2.0 * np.arctan2(vnorm, w)
    safe = np.where(small, 1.0, vnorm)
    return np.where(small, 2.0 * v / np.where(small, w, 1.0), angle * v / safe)


def quat_angle(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Total rotation angle (rad) of q1 ⊗ q2⁻¹."""
    return np.linalg.norm(quat_to_rotvec(quat_product(q1, quat_conj(q2))), axis=-1)


def euler_to_quat(yaw: np.ndarray, pitch: np.ndarray, roll: np.ndarray) -> np.ndarray:
    """ZYX Euler angles (rad) to quaternion: qz(yaw) ⊗ qy(pitch) ⊗ qx(roll)."""
    cy, sy = np.cos(0.5 * np.asarray(yaw)), np.sin(0.5 * np.asarray(yaw))
    cp, sp = np.cos(0.5 * np.asarray(pitch)), np.sin(0.5 * np.asarray(pitch))
    cr, sr = np.cos(0.5 * np.asarray(roll)), np.sin(0.5 * np.asarray(roll))
    return np.stack([
        cr * cp * cy + sr * sp * sy,
        sr * cp * cy - cr * sp * sy,
        cr * sp * cy + sr * cp * sy,
        cr * cp * sy - sr * sp * cy,
    ], axis=-1)


def quat_to_euler(q: np.ndarray) -> np.ndarray:
    """Quaternion to ZYX Euler angles, returned as [roll, pitch, yaw] in rad."""
    q = quat_normalize(q)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    roll = np.arctan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    pitch = np.arcsin(np.clip(2.0 * (w * y - z * x), -1.0, 1.0))
    yaw = np.arctan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return np.stack([roll, pitch, yaw], axis=-1)


def euler_rates_to_body(
    angles: np.ndarray, rates: np.ndarray,
) -> np.ndarray:
    """Body angular rate from ZYX angles [yaw, pitch, roll] and their derivatives."""
    _, pitch, roll = angles[..., 0], angles[..., 1], angles[..., 2]
    dyaw, dpitch, droll = rates[..., 0], rates[..., 1], rates[..., 2]
    sp, cp = np.sin(pitch), np.cos(pitch)
    sr, cr = np.sin(roll), np.cos(roll)
    return np.stack([
        droll - dyaw * sp,
        dpitch * cr + dyaw * cp * sr,
        -dpitch * sr + dyaw * cp * cr,
    ], axis=-1)


def euler_accels_to_body(
    angles: np.ndarray, rates: np.ndarray, accels: np.ndarray,
) -> np.ndarray:
    """Time derivative of `euler_rates_to_body`, given the second derivatives of the angles."""
    _, pitch, roll = angles[..., 0], angles[..., 1], angles[..., 2]
    dyaw, dpitch, droll = rates[..., 0], rates[..., 1], rates[..., 2]
    ddyaw, ddpitch, ddroll = accels[..., 0], accels[..., 1], accels[..., 2]
    sp, cp = np.sin(pitch), np.cos(pitch)
    sr, cr = np.sin(roll), np.cos(roll)
    return np.stack([
        ddroll - ddyaw * sp - dyaw * cp * dpitch,
        (ddpitch * cr - dpitch * sr * droll + ddyaw * cp * sr
         - dyaw * sp * dpitch * sr + dyaw * cp * cr * droll),
        (-ddpitch * sr - dpitch * cr * droll + ddyaw * cp * cr
         - dyaw * sp * dpitch * cr - dyaw * cp * sr * droll),
    ], axis=-1)


@dataclass(frozen=True)
class UnitQuaternion:
    """Value type for a single attitude; normalized on construction."""
    w: float
    v: tuple[float, float, float]

    @classmethod
    def from_array(cls, q: np.ndarray) -> "UnitQuaternion":
        q = quat_normalize(np.asarray(q, dtype=float).reshape(4))
        return cls(w=float(q[0]), v=(float(q[1]), float(q[2]), float(q[3])))

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(w=1.0, v=(0.0, 0.0, 0.0))

    @classmethod
    def from_rotvec(cls, phi: np.ndarray) -> "UnitQuaternion":
        return cls.from_array(rotvec_to_quat(phi))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.w, *self.v])

    def canonical(self) -> "UnitQuaternion":
        return UnitQuaternion.from_array(quat_canonical(self.array))

    def inverse(self) -> "UnitQuaternion":
        return UnitQuaternion.from_array(quat_conj(self.array))

    def dcm(self) -> np.ndarray:
        return quat_to_dcm(self.array)

    def rotvec(self) -> np.ndarray:
        return quat_to_rotvec(self.array)

    def rotate(self, d: np.ndarray) -> np.ndarray:
        return self.dcm() @ np.asarray(d, dtype=float)

    def __mul__(self, other: "UnitQuaternion") -> "UnitQuaternion":
        return UnitQuaternion.from_array(quat_mul(self.array, other.array))
