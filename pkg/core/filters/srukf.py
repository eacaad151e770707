"""
Square-root UKF on the error chart.

Sigma points are x ⊕ (±γ S_i), so attitudes stay unit quaternions. The
covariance is carried as a lower-triangular factor S with P = S Sᵀ:

    time update      QR of the weighted deviations stacked on √Q_d, then a
                     rank-1 update for the centre point
    measurement      QR for the innovation factor S_z, gain from two
                     triangular solves, then rank-1 downdates of S by the
                     columns of K S_z
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from core.body.layout import StateLayout
from core.body.state import NavState, inject_batch, retract_batch
from core.config import FilterTuning, NoiseConfig
from core.events import EventBus
from core.exceptions import ConfigError, DimensionMismatchError, FactorCorruptedError, InnovationSingularError
from core.filters.base import BaseFilter, channel_nis, process_noise_diag
from core.filters.cholesky import check_factor, chol_downdate_columns, chol_update, positive_diagonal
from core.ins.propagation import ImuEpoch, check_step, propagate_states
from core.measurements.channels import BaseChannel, stack_measured, stack_noise_var, stack_predict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SigmaWeights:
    alpha: float
    beta: float
    kappa: float
    lam: float
    gamma: float
    wm: np.ndarray
    wc: np.ndarray

    @property
    def n_points(self) -> int:
        return self.wm.shape[0]


@dataclass
class SrukfState:
    x: NavState
    S: np.ndarray
    t: float = 0.0


@dataclass
class SigmaUpdate:
    """Result of one square-root measurement update on raw arrays."""
    e: np.ndarray
    S: np.ndarray
    innovation: np.ndarray
    Sz: np.ndarray


def unscented_weights(L: int, alpha: float = 1.0, beta: float = 2.0, kappa: float = 0.0) -> SigmaWeights:
    lam = alpha ** 2 * (L + kappa) - L
    if L + lam <= 0.0:
        raise ConfigError(f"sigma-point spread L + lambda = {L + lam} must be positive")
    wm = np.full(2 * L + 1, 1.0 / (2.0 * (L + lam)))
    wc = wm.copy()
    wm[0] = lam / (L + lam)
    wc[0] = wm[0] + 1.0 - alpha ** 2 + beta
    return SigmaWeights(alpha, beta, kappa, lam, math.sqrt(L + lam), wm, wc)


def sigma_errors(S: np.ndarray, weights: SigmaWeights) -> np.ndarray:
    """Error-chart offsets [0, +γS_i, −γS_i], shape (2L+1, L)."""
    check_factor(S)
    cols = weights.gamma * S.T
    return np.vstack([np.zeros((1, S.shape[0])), cols, -cols])


def sigma_points(state: SrukfState, weights: SigmaWeights) -> list[NavState]:
    E = sigma_errors(state.S, weights)
    X = inject_batch(state.x.layout, state.x.vec, E)
    return [NavState(state.x.layout, row) for row in X]


def chart_mean(
    layout: StateLayout,
    X: np.ndarray,
    wm: np.ndarray,
    start: np.ndarray,
    iterations: int = 5,
    tol: float = 1e-12,
) -> tuple[np.ndarray, int]:
    """Weighted mean on the chart: retract, average, inject until the shift is below tol."""
    mean = np.array(start, dtype=float)
    for it in range(1, iterations + 1):
        delta = wm @ retract_batch(layout, X, mean)
        mean = inject_batch(layout, mean, delta)
        if np.linalg.norm(delta) < tol:
            return mean, it
    return mean, iterations


def sqrt_factor(D: np.ndarray, wc: np.ndarray, sqrt_noise: np.ndarray) -> np.ndarray:
    """
    Lower factor of Σ wc_i D_i D_iᵀ + diag(sqrt_noise²).

    D holds the deviations of all 2L+1 points, row 0 being the centre.
    """
    n = D.shape[1]
    A = np.vstack([np.sqrt(wc[1:])[:, None] * D[1:], np.diag(sqrt_noise)])
    r = np.linalg.qr(A, mode="r")[:n, :n]
    S = positive_diagonal(r.T)
    S, failed = chol_update(S, math.sqrt(abs(wc[0])) * D[0], 1.0 if wc[0] >= 0 else -1.0)
    if failed >= 0:
        raise FactorCorruptedError(f"centre-point rank-1 update failed at column {failed}")
    return S


def sr_update_core(
    S: np.ndarray,
    dev: np.ndarray,
    Z: np.ndarray,
    z_meas: np.ndarray,
    sqrt_R: np.ndarray,
    weights: SigmaWeights,
) -> SigmaUpdate:
    """
    Square-root measurement update on arrays.

    dev: sigma-point error offsets (2L+1, L); Z: predicted measurements
    at those points (2L+1, m). Raises InnovationSingularError or
    DowndateError; nothing is modified on failure.
    """
    z_bar = weights.wm @ Z
    Zd = Z - z_bar
    m = Z.shape[1]
    A = np.vstack([np.sqrt(weights.wc[1:])[:, None] * Zd[1:], np.diag(sqrt_R)])
    Sz = positive_diagonal(np.linalg.qr(A, mode="r")[:m, :m].T)
    Sz, failed = chol_update(Sz, math.sqrt(abs(weights.wc[0])) * Zd[0], 1.0 if weights.wc[0] >= 0 else -1.0)
    if failed >= 0 or not np.all(np.isfinite(Sz)) or np.any(np.diag(Sz) <= 0.0):
        raise InnovationSingularError(f"{m} rows")

    Pxz = (dev * weights.wc[:, None]).T @ Zd
    T = solve_triangular(Sz, Pxz.T, lower=True)
    K = solve_triangular(Sz.T, T, lower=False).T

    innovation = np.asarray(z_meas, dtype=float) - z_bar
    e = K @ innovation
    S_new = chol_downdate_columns(S, K @ Sz)
    return SigmaUpdate(e=e, S=S_new, innovation=innovation, Sz=Sz)


def srukf_propagate(
    state: SrukfState,
    epoch: ImuEpoch,
    noise: NoiseConfig,
    dt: float,
    weights: SigmaWeights,
    gravity_n: np.ndarray,
    tuning: Optional[FilterTuning] = None,
) -> tuple[SrukfState, int]:
    """Time update. Returns the new state and the chart-mean iteration count."""
    check_step(dt)
    tuning = tuning or FilterTuning()
    layout = state.x.layout
    E = sigma_errors(state.S, weights)
    X = inject_batch(layout, state.x.vec, E)
    Xp = propagate_states(layout, X, epoch.f_raw, epoch.w_raw, dt, gravity_n)

    mean, iterations = chart_mean(layout, Xp, weights.wm, Xp[0], tuning.mean_iterations, tuning.mean_tolerance)
    D = retract_batch(layout, Xp, mean)
    sqrt_q = np.sqrt(process_noise_diag(layout, noise, dt))
    S_new = sqrt_factor(D, weights.wc, sqrt_q)
    check_factor(S_new)
    return SrukfState(x=NavState(layout, mean), S=S_new, t=state.t + dt), iterations


def srukf_update(
    state: SrukfState, channels: list[BaseChannel], weights: SigmaWeights,
) -> tuple[SrukfState, list[tuple[str, float]]]:
    """Measurement update through the nonlinear predictors; no Jacobians involved."""
    if not channels:
        raise ValueError("srukf_update needs at least one channel")
    layout = state.x.layout
    E = sigma_errors(state.S, weights)
    X = inject_batch(layout, state.x.vec, E)
    Z = stack_predict(channels, layout, X)
    result = sr_update_core(
        state.S, E, Z, stack_measured(channels), np.sqrt(stack_noise_var(channels)), weights,
    )
    x_new = NavState(layout, inject_batch(layout, state.x.vec, result.e))
    nis = channel_nis(channels, result.innovation, result.Sz @ result.Sz.T)
    return SrukfState(x=x_new, S=result.S, t=state.t), nis


class SrukfFilter(BaseFilter):
    """Square-root unscented filter with chart-based sigma points."""

    name = "srukf"

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
        self.S = cholesky(0.5 * (P0 + P0.T), lower=True)
        self.weights = unscented_weights(
            self.layout.error_dim, self.tuning.alpha, self.tuning.beta, self.tuning.kappa,
        )
        self.max_mean_iterations = 0
        logger.debug(f"[srukf] {self.weights.n_points} sigma points, gamma={self.weights.gamma:.3f}")

    @property
    def state(self) -> SrukfState:
        return SrukfState(x=self.x.copy(), S=self.S.copy(), t=self.t)

    def propagate(self, epoch: ImuEpoch, dt: float) -> None:
        new, iterations = srukf_propagate(
            self.state, epoch, self.noise, dt, self.weights, self.gravity_n, self.tuning,
        )
        self.max_mean_iterations = max(self.max_mean_iterations, iterations)
        self.x, self.S, self.t = new.x, new.S, new.t

    def _update_stacked(self, channels: list[BaseChannel]) -> list[tuple[str, float]]:
        new, nis = srukf_update(SrukfState(self.x, self.S, self.t), channels, self.weights)
        self.x, self.S = new.x, new.S
        return nis

    def covariance(self) -> np.ndarray:
        return self.S @ self.S.T

    def variances(self) -> np.ndarray:
        return np.sum(self.S ** 2, axis=1)

    @property
    def stats(self) -> dict:
        out = super().stats
        out["max_mean_iterations"] = self.max_mean_iterations
        return out
