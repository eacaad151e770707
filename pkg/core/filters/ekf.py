"""
Error-state EKF for the chain.

Continuous error dynamics per link k (error chart q <- exp(φ) ⊗ q):

    δṗ = δv
    δv̇ = −[R f̂]× φ − R δb_a
    φ̇  = −R δb_g

Biases, segments and the camera lever arm are random walks. Discretized
with Φ = I + F dt; updates in Joseph form followed by the multiplicative
reset implied by inject_error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from core.body.state import NavState, inject_error
from core.config import FilterTuning, NoiseConfig
from core.events import EventBus
from core.exceptions import DimensionMismatchError, InnovationSingularError
from core.filters.base import BaseFilter, channel_nis, process_noise_diag
from core.ins.propagation import ImuEpoch, check_step, propagate_state
from core.measurements.channels import BaseChannel, stack_jacobian, stack_noise_var
from core.rotation import skew

logger = logging.getLogger(__name__)


@dataclass
class EkfState:
    x: NavState
    P: np.ndarray
    t: float = 0.0


def symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def assemble_F(x: NavState, epoch: ImuEpoch) -> np.ndarray:
    """Continuous-time error dynamics matrix at x with the epoch's raw IMU."""
    lay = x.layout
    F = np.zeros((lay.error_dim, lay.error_dim))
    I3 = np.eye(3)
    for k, blocks in enumerate(lay.error_links):
        R = x.dcm(k)
        f_n = R @ (epoch.f_raw[k] - x.b_a(k))
        F[blocks.p, blocks.v] = I3
        F[blocks.v, blocks.att] = -skew(f_n)
        F[blocks.v, blocks.ba] = -R
        F[blocks.att, blocks.bg] = -R
    return F


def propagate_cov(
    P: np.ndarray,
    F: np.ndarray,
    noise: NoiseConfig | np.ndarray,
    dt: float,
    layout=None,
) -> np.ndarray:
    """P' = Φ P Φᵀ + Q_d with Φ = I + F dt.

    `noise` is either a NoiseConfig (Q_d built on `layout`) or a ready Q_d
    diagonal.
    """
    check_step(dt)
    if isinstance(noise, NoiseConfig):
        if layout is None:
            raise ValueError("layout is required to build Q_d from a NoiseConfig")
        q_d = process_noise_diag(layout, noise, dt)
    else:
        q_d = np.asarray(noise, dtype=float)
    Phi = np.eye(P.shape[0]) + F * dt
    P_new = Phi @ P @ Phi.T
    P_new[np.diag_indices_from(P_new)] += q_d
    return symmetrize(P_new)


def kalman_update(
    P: np.ndarray, H: np.ndarray, residual: np.ndarray, R_meas: np.ndarray, labels: str = "",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Linear update on the error chart.

    Returns (error correction e, Joseph-form posterior P, innovation
    covariance S). Raises InnovationSingularError if S is not SPD.
    """
    P = np.atleast_2d(P)
    H = np.atleast_2d(H)
    R_meas = np.atleast_2d(R_meas)
    residual = np.atleast_1d(residual)
    if H.shape[1] != P.shape[0]:
        raise DimensionMismatchError("H columns", P.shape[0], H.shape[1])

    PHt = P @ H.T
    S = H @ PHt + R_meas
    try:
        factor = cho_factor(symmetrize(S), lower=True)
    except LinAlgError as e:
        raise InnovationSingularError(labels or f"{H.shape[0]} rows") from e
    if not np.all(np.isfinite(factor[0])):
        raise InnovationSingularError(labels or f"{H.shape[0]} rows")

    K = cho_solve(factor, PHt.T).T
    e = K @ residual
    A = np.eye(P.shape[0]) - K @ H
    P_new = A @ P @ A.T + K @ R_meas @ K.T
    return e, symmetrize(P_new), S


def ekf_update(state: EkfState, H: np.ndarray, z_resid: np.ndarray, R_meas: np.ndarray) -> EkfState:
    """Correct the state with a stacked residual; the attitude reset happens inside inject."""
    e, P_new, _ = kalman_update(state.P, H, z_resid, R_meas)
    return EkfState(x=inject_error(state.x, e), P=P_new, t=state.t)


class EkfFilter(BaseFilter):
    """Multiplicative error-state EKF."""

    name = "ekf"

    def __init__(
        self,
        x0: NavState,
        P0: np.ndarray,
        noise: NoiseConfig,
        gravity_n: np.ndarray,
        t0: float = 0.0,
        tuning: Optional[FilterTuning] = None,
        bus: Optional[EventBus] = None,
    ):
        super().__init__(x0, noise, gravity_n, t0, tuning, bus)
        P0 = np.asarray(P0, dtype=float)
        if P0.shape != (self.layout.error_dim, self.layout.error_dim):
            raise DimensionMismatchError("P0", (self.layout.error_dim,) * 2, P0.shape)
        self.P = symmetrize(P0)

    @property
    def state(self) -> EkfState:
        return EkfState(x=self.x.copy(), P=self.P.copy(), t=self.t)

    def propagate(self, epoch: ImuEpoch, dt: float) -> None:
        F = assemble_F(self.x, epoch)
        self.P = propagate_cov(self.P, F, self.noise, dt, self.layout)
        self.x = propagate_state(self.x, epoch, dt, self.gravity_n)
        self.t += dt

    def _update_stacked(self, channels: list[BaseChannel]) -> list[tuple[str, float]]:
        H = stack_jacobian(channels, self.x)
        residual = np.concatenate([c.residual(self.x) for c in channels])
        R_meas = np.diag(stack_noise_var(channels))
        labels = ", ".join(c.name for c in channels)
        e, P_new, S = kalman_update(self.P, H, residual, R_meas, labels)
        self.x = inject_error(self.x, e)
        self.P = P_new
        return channel_nis(channels, residual, S)

    def covariance(self) -> np.ndarray:
        return self.P.copy()

    def variances(self) -> np.ndarray:
        return np.diag(self.P).copy()
