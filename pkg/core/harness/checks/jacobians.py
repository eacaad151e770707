"""Analytic F and H against central differences through the error chart."""

from __future__ import annotations

import numpy as np

from core.body.layout import StateLayout, build_layout
from core.body.model import arm_chain
from core.body.state import NavState, inject_batch, retract_batch
from core.config import AppSettings
from core.filters.ekf import assemble_F
from core.harness.checks.base import BaseCheck, CheckResult
from core.ins.propagation import ImuEpoch, propagate_states
from core.measurements.channels import (
    BaseChannel,
    CameraPositionChannel,
    GravityChannel,
    JointPositionChannel,
    JointVelocityChannel,
    assemble_H,
)
from core.measurements.types import PositionFix
from core.rotation import quat_normalize

TOLERANCE = 1e-5


def random_state(layout: StateLayout, rng: np.random.Generator) -> NavState:
    """Generic state with O(1) positions, random attitudes and non-zero biases and segments."""
    x = NavState.identity(layout)
    for k in range(layout.n_links):
        x.set_p(k, rng.normal(0.0, 1.0, 3))
        x.set_v(k, rng.normal(0.0, 1.0, 3))
        x.set_q(k, quat_normalize(rng.normal(size=4)))
        x.set_b_a(k, rng.normal(0.0, 0.1, 3))
        x.set_b_g(k, rng.normal(0.0, 0.01, 3))
    for owner, other in layout.segments:
        x.set_segment(owner, other, rng.normal(0.0, 0.2, 3))
    x.set_l_c(rng.normal(0.0, 0.1, 3))
    return x


def random_epoch(n_links: int, rng: np.random.Generator, t: float = 0.0) -> ImuEpoch:
    f = rng.normal(0.0, 3.0, (n_links, 3)) + np.array([0.0, 0.0, -9.81])
    return ImuEpoch(t=t, f_raw=f, w_raw=rng.normal(0.0, 1.0, (n_links, 3)))


def numeric_F(
    x: NavState, epoch: ImuEpoch, gravity_n: np.ndarray, dt: float = 1e-6, eps: float = 1e-4,
) -> np.ndarray:
    """(Φ − I)/dt with Φ from central differences of one propagation step on the chart."""
    layout = x.layout
    L = layout.error_dim
    E = np.vstack([eps * np.eye(L), -eps * np.eye(L)])
    X = inject_batch(layout, x.vec, E)
    Xp = propagate_states(layout, X, epoch.f_raw, epoch.w_raw, dt, gravity_n)
    ref = propagate_states(layout, x.vec, epoch.f_raw, epoch.w_raw, dt, gravity_n)
    D = retract_batch(layout, Xp, ref)
    Phi = (D[:L] - D[L:]).T / (2.0 * eps)
    return (Phi - np.eye(L)) / dt


def numeric_H(channel: BaseChannel, x: NavState, eps: float = 1e-6) -> np.ndarray:
    """Central differences of the nonlinear predictor through inject."""
    layout = x.layout
    L = layout.error_dim
    E = np.vstack([eps * np.eye(L), -eps * np.eye(L)])
    Z = channel.predict(layout, inject_batch(layout, x.vec, E))
    return (Z[:L] - Z[L:]).T / (2.0 * eps)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(analytic))), 1.0)
    return float(np.max(np.abs(analytic - numeric))) / scale


def sample_channels(x: NavState, epoch: ImuEpoch, rng: np.random.Generator) -> list[BaseChannel]:
    """One channel of every kind on the arm."""
    fix = PositionFix(t=epoch.t, p_c_meas=rng.normal(0.0, 1.0, 3), sigma=0.05)
    return [
        JointPositionChannel((0, 1), 0.01),
        JointPositionChannel((1, 2), 0.01),
        JointVelocityChannel((0, 1), epoch.w_raw[0], epoch.w_raw[1], 0.01),
        JointVelocityChannel((1, 2), epoch.w_raw[1], epoch.w_raw[2], 0.01),
        CameraPositionChannel(fix),
        GravityChannel(1, epoch.f_raw[1], np.array([0.0, 0.0, 9.81]), 0.05),
    ]


class JacobianCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "jacobians"

    @property
    def description(self) -> str:
        return "assemble_F and assemble_H match central differences (relative error < 1e-5)"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        model = arm_chain()
        layout = build_layout(model)
        rng = np.random.default_rng(settings.scenario.seed)
        n_states = 100 if full else 20
        worst: dict[str, float] = {}
        for _ in range(n_states):
            x = random_state(layout, rng)
            epoch = random_epoch(model.n_links, rng)
            worst["F"] = max(worst.get("F", 0.0), relative_error(assemble_F(x, epoch), numeric_F(x, epoch, model.gravity)))
            for channel in sample_channels(x, epoch, rng):
                err = relative_error(assemble_H(channel, x), numeric_H(channel, x))
                worst[channel.kind] = max(worst.get(channel.kind, 0.0), err)
        passed = all(v < TOLERANCE for v in worst.values())
        summary = ", ".join(f"{k} {v:.1e}" for k, v in sorted(worst.items()))
        return self.result(passed, f"{n_states} states, worst relative error: {summary}", worst=worst)
