"""
Navigation state of the whole chain and the error chart around it.

inject:  linear blocks add, attitude q <- exp(φ) ⊗ q
retract: linear blocks subtract, attitude φ = log(q ⊗ q_ref⁻¹)

The array-level pair (inject_batch / retract_batch) broadcasts over leading
axes so sigma-point sets go through one vectorized call.
"""

from __future__ import annotations

import numpy as np

from core.body.layout import StateLayout
from core.exceptions import DimensionMismatchError
from core.rotation import (
    IDENTITY_QUAT,
    UnitQuaternion,
    quat_conj,
    quat_mul,
    quat_product,
    quat_to_dcm,
    quat_to_rotvec,
    rotvec_to_quat,
)


def inject_batch(layout: StateLayout, X: np.ndarray, E: np.ndarray) -> np.ndarray:
    """x ⊕ e on raw arrays: X (..., state_dim), E (..., error_dim)."""
    X = np.asarray(X, dtype=float)
    E = np.asarray(E, dtype=float)
    shape = np.broadcast_shapes(X.shape[:-1], E.shape[:-1])
    out = np.array(np.broadcast_to(X, shape + (layout.state_dim,)))
    out[..., layout.lin_state_idx] += E[..., layout.lin_error_idx]
    dq = rotvec_to_quat(E[..., layout.rotvec_error_idx])
    q = out[..., layout.quat_state_idx]
    out[..., layout.quat_state_idx] = quat_mul(dq, q)
    return out


def retract_batch(layout: StateLayout, X: np.ndarray, X_ref: np.ndarray) -> np.ndarray:
    """x ⊖ x_ref on raw arrays; inverse of inject_batch."""
    X = np.asarray(X, dtype=float)
    X_ref = np.asarray(X_ref, dtype=float)
    shape = np.broadcast_shapes(X.shape[:-1], X_ref.shape[:-1])
    out = np.zeros(shape + (layout.error_dim,))
    out[..., layout.lin_error_idx] = X[..., layout.lin_state_idx] - X_ref[..., layout.lin_state_idx]
    q = X[..., layout.quat_state_idx]
    q_ref = X_ref[..., layout.quat_state_idx]
    out[..., layout.rotvec_error_idx] = quat_to_rotvec(quat_product(q, quat_conj(q_ref)))
    return out


class NavState:
    """Flat chain state addressed through a StateLayout."""

    __slots__ = ("layout", "vec")

    def __init__(self, layout: StateLayout, vec: np.ndarray):
        vec = np.array(vec, dtype=float)
        if vec.shape != (layout.state_dim,):
            raise DimensionMismatchError("state vector", layout.state_dim, vec.shape)
        self.layout = layout
        self.vec = vec

    @classmethod
    def identity(cls, layout: StateLayout) -> "NavState":
        """Zero positions/velocities/biases/segments, identity attitudes."""
        vec = np.zeros(layout.state_dim)
        vec[layout.quat_state_idx] = IDENTITY_QUAT
        return cls(layout, vec)

    def copy(self) -> "NavState":
        return NavState(self.layout, self.vec.copy())

    # Per-link accessors

    def p(self, k: int) -> np.ndarray:
        return self.vec[self.layout.state_links[k].p].copy()

    def v(self, k: int) -> np.ndarray:
        return self.vec[self.layout.state_links[k].v].copy()

    def q(self, k: int) -> np.ndarray:
        return self.vec[self.layout.state_links[k].att].copy()

    def attitude(self, k: int) -> UnitQuaternion:
        return UnitQuaternion.from_array(self.q(k))

    def dcm(self, k: int) -> np.ndarray:
        return quat_to_dcm(self.q(k))

    def b_a(self, k: int) -> np.ndarray:
        return self.vec[self.layout.state_links[k].ba].copy()

    def b_g(self, k: int) -> np.ndarray:
        return self.vec[self.layout.state_links[k].bg].copy()

    def segment(self, owner: int, other: int) -> np.ndarray:
        return self.vec[self.layout.state_segments[(owner, other)]].copy()

    @property
    def l_c(self) -> np.ndarray:
        return self.vec[self.layout.state_camera].copy()

    # Stacked views, (N, 3) / (N, 4)

    @property
    def positions(self) -> np.ndarray:
        return self.vec[self.layout.state_index["p"]]

    @property
    def velocities(self) -> np.ndarray:
        return self.vec[self.layout.state_index["v"]]

    @property
    def quaternions(self) -> np.ndarray:
        return self.vec[self.layout.quat_state_idx]

    @property
    def accel_biases(self) -> np.ndarray:
        return self.vec[self.layout.state_index["ba"]]

    @property
    def gyro_biases(self) -> np.ndarray:
        return self.vec[self.layout.state_index["bg"]]

    # Setters

    def set_p(self, k: int, value) -> None:
        self.vec[self.layout.state_links[k].p] = value

    def set_v(self, k: int, value) -> None:
        self.vec[self.layout.state_links[k].v] = value

    def set_q(self, k: int, value) -> None:
        q = np.asarray(value, dtype=float)
        self.vec[self.layout.state_links[k].att] = q / np.linalg.norm(q)

    def set_b_a(self, k: int, value) -> None:
        self.vec[self.layout.state_links[k].ba] = value

    def set_b_g(self, k: int, value) -> None:
        self.vec[self.layout.state_links[k].bg] = value

    def set_segment(self, owner: int, other: int, value) -> None:
        self.vec[self.layout.state_segments[(owner, other)]] = value

    def set_l_c(self, value) -> None:
        self.vec[self.layout.state_camera] = value

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.vec)))

    def __repr__(self) -> str:
        return f"NavState(links={self.layout.n_links}, dim={self.layout.state_dim})"


def inject_error(x: NavState, e: np.ndarray) -> NavState:
    """x ⊕ e; output quaternions renormalized."""
    e = np.asarray(e, dtype=float)
    if e.shape != (x.layout.error_dim,):
        raise DimensionMismatchError("error vector", x.layout.error_dim, e.shape)
    return NavState(x.layout, inject_batch(x.layout, x.vec, e))


def retract_error(x: NavState, x_ref: NavState) -> np.ndarray:
    """x ⊖ x_ref as an error vector."""
    if x.layout.state_dim != x_ref.layout.state_dim or x.layout.error_dim != x_ref.layout.error_dim:
        raise DimensionMismatchError(
            "layouts", (x_ref.layout.state_dim, x_ref.layout.error_dim),
            (x.layout.state_dim, x.layout.error_dim),
        )
    return retract_batch(x.layout, x.vec, x_ref.vec)
