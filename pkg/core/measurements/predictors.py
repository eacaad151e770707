"""
Nonlinear measurement predictors.

Each predictor exists twice: a public form on a NavState, and a batched
form on raw state arrays (..., state_dim) used for sigma points. Both share
the same arithmetic.

    joint position   p_j − p_i + R_j l_ji − R_i l_ij          (measured 0)
    joint velocity   v_j − v_i + R_j(ω_j × l_ji) − R_i(ω_i × l_ij)   (measured 0)
    camera position  p_0 + R_0 l_c
    gravity          −R_k f̂_k                                 (measured g_n)
"""

from __future__ import annotations

import numpy as np

from core.body.layout import StateLayout
from core.body.state import NavState
from core.exceptions import MissingRateError, NotStationaryError, UnknownJointError
from core.measurements.types import StationaryFlag
from core.rotation import quat_to_dcm


def _rotate(R: np.ndarray, d: np.ndarray) -> np.ndarray:
    return np.einsum("...ij,...j->...i", R, d)


def _check_joint(layout: StateLayout, joint: tuple[int, int]) -> tuple[int, int]:
    i, j = joint
    if (i, j) not in layout.state_segments or (j, i) not in layout.state_segments:
        raise UnknownJointError((i, j))
    return i, j


def _link_dcm(layout: StateLayout, X: np.ndarray, k: int) -> np.ndarray:
    return quat_to_dcm(X[..., layout.state_links[k].att])


# Batched forms

def joint_pos_batch(layout: StateLayout, X: np.ndarray, joint: tuple[int, int]) -> np.ndarray:
    i, j = _check_joint(layout, joint)
    sl = layout.state_links
    l_ij = X[..., layout.state_segments[(i, j)]]
    l_ji = X[..., layout.state_segments[(j, i)]]
    return (
        X[..., sl[j].p] - X[..., sl[i].p]
        + _rotate(_link_dcm(layout, X, j), l_ji)
        - _rotate(_link_dcm(layout, X, i), l_ij)
    )


def joint_vel_batch(
    layout: StateLayout,
    X: np.ndarray,
    joint: tuple[int, int],
    w_raw_i: np.ndarray,
    w_raw_j: np.ndarray,
) -> np.ndarray:
    """Joint velocity with rates corrected by each row's own gyro biases."""
    i, j = _check_joint(layout, joint)
    sl = layout.state_links
    w_i = np.asarray(w_raw_i, dtype=float) - X[..., sl[i].bg]
    w_j = np.asarray(w_raw_j, dtype=float) - X[..., sl[j].bg]
    l_ij = X[..., layout.state_segments[(i, j)]]
    l_ji = X[..., layout.state_segments[(j, i)]]
    return (
        X[..., sl[j].v] - X[..., sl[i].v]
        + _rotate(_link_dcm(layout, X, j), np.cross(w_j, l_ji))
        - _rotate(_link_dcm(layout, X, i), np.cross(w_i, l_ij))
    )


def camera_pos_batch(layout: StateLayout, X: np.ndarray) -> np.ndarray:
    c = layout.camera_link
    return X[..., layout.state_links[c].p] + _rotate(_link_dcm(layout, X, c), X[..., layout.state_camera])


def gravity_batch(layout: StateLayout, X: np.ndarray, k: int, f_raw_k: np.ndarray) -> np.ndarray:
    """−R_k (f_raw − b_a) with each row's own accel bias."""
    f_hat = np.asarray(f_raw_k, dtype=float) - X[..., layout.state_links[k].ba]
    return -_rotate(_link_dcm(layout, X, k), f_hat)


# Public forms

def joint_pos_predicted(x: NavState, joint: tuple[int, int]) -> np.ndarray:
    return joint_pos_batch(x.layout, x.vec, joint)


def joint_vel_predicted(
    x: NavState,
    joint: tuple[int, int],
    w_hat_i: np.ndarray | None,
    w_hat_j: np.ndarray | None,
) -> np.ndarray:
    """Joint velocity from bias-corrected rates of both links at the same epoch."""
    i, j = _check_joint(x.layout, joint)
    if w_hat_i is None:
        raise MissingRateError(i)
    if w_hat_j is None:
        raise MissingRateError(j)
    R_i, R_j = x.dcm(i), x.dcm(j)
    return (
        x.v(j) - x.v(i)
        + R_j @ np.cross(w_hat_j, x.segment(j, i))
        - R_i @ np.cross(w_hat_i, x.segment(i, j))
    )


def camera_pos_predicted(x: NavState) -> np.ndarray:
    return camera_pos_batch(x.layout, x.vec)


def gravity_predicted(x: NavState, k: int, f_hat_k: np.ndarray, flag: StationaryFlag) -> np.ndarray:
    """ĝ = −R_k f̂_k; only valid while link k is stationary."""
    if flag.link_id != k or not flag.is_stationary:
        raise NotStationaryError(k)
    return -(x.dcm(k) @ np.asarray(f_hat_k, dtype=float))
