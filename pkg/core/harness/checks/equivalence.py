"""SRUKF and EKF agree where the problem is linear-Gaussian."""

from __future__ import annotations

import numpy as np

from core.body.layout import build_layout
from core.body.model import single_link
from core.body.state import NavState
from core.config import AppSettings, NoiseConfig
from core.events import EventBus
from core.filters.ekf import EkfFilter, kalman_update
from core.filters.srukf import SrukfFilter, sigma_errors, sr_update_core, unscented_weights
from core.harness.checks.base import BaseCheck, CheckResult
from core.ins.propagation import ImuEpoch
from core.measurements.channels import CameraPositionChannel
from core.measurements.types import PositionFix

TOLERANCE = 1e-8
SCALAR_TOLERANCE = 1e-12
TINY_SD = 1e-10


def scalar_case() -> dict[str, float]:
    """Prior N(0, 1), direct observation z = 1 with variance 1."""
    e, P, _ = kalman_update(np.eye(1), np.eye(1), np.ones(1), np.eye(1))
    weights = unscented_weights(1)
    S = np.eye(1)
    dev = sigma_errors(S, weights)
    sr = sr_update_core(S, dev, dev.copy(), np.ones(1), np.ones(1), weights)
    return {
        "ekf_mean": float(e[0]), "ekf_var": float(P[0, 0]),
        "srukf_mean": float(sr.e[0]), "srukf_var": float((sr.S @ sr.S.T)[0, 0]),
    }


def linear_pair(steps: int, seed: int = 0) -> tuple[float, float]:
    """
    Single link at rest, level, with every block but position and velocity pinned.
    Returns the largest mean and covariance differences over the run.
    """
    model = single_link()
    layout = build_layout(model)
    noise = NoiseConfig(sigma_a=0.1, sigma_g=0.0, q_ba=0.0, q_bg=0.0, q_l=0.0)
    sd = np.full(layout.error_dim, TINY_SD)
    sd[layout.error_index["p"].ravel()] = 0.1
    sd[layout.error_index["v"].ravel()] = 0.01
    P0 = np.diag(sd ** 2)

    x0 = NavState.identity(layout)
    bus = EventBus()
    ekf = EkfFilter(x0, P0, noise, model.gravity, bus=bus)
    ukf = SrukfFilter(x0, P0, noise, model.gravity, bus=bus)

    rng = np.random.default_rng(seed)
    epoch = ImuEpoch(t=0.0, f_raw=-model.gravity[None, :], w_raw=np.zeros((1, 3)))
    dt = 0.01
    mean_diff = cov_diff = 0.0
    for k in range(steps):
        ekf.propagate(epoch, dt)
        ukf.propagate(epoch, dt)
        fix = PositionFix(t=(k + 1) * dt, p_c_meas=rng.normal(0.0, 0.05, 3), sigma=0.05)
        ekf.update([CameraPositionChannel(fix)])
        ukf.update([CameraPositionChannel(fix)])
        mean_diff = max(mean_diff, float(np.max(np.abs(ekf.x.vec - ukf.x.vec))))
        cov_diff = max(cov_diff, float(np.max(np.abs(ekf.covariance() - ukf.covariance()))))
    return mean_diff, cov_diff


class FilterEquivalenceCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "equivalence"

    @property
    def description(self) -> str:
        return "SRUKF equals EKF on linear-Gaussian problems; scalar case gives mean 0.5, variance 0.5"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        scalar = scalar_case()
        scalar_ok = all(abs(v - 0.5) <= SCALAR_TOLERANCE for v in scalar.values())
        mean_diff, cov_diff = linear_pair(100, settings.scenario.seed)
        passed = scalar_ok and mean_diff < TOLERANCE and cov_diff < TOLERANCE
        return self.result(
            passed,
            f"scalar {'ok' if scalar_ok else scalar}; 100 steps: max mean diff {mean_diff:.1e}, "
            f"max covariance diff {cov_diff:.1e}",
            scalar=scalar, mean_diff=mean_diff, cov_diff=cov_diff,
        )
