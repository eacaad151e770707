"""Tests for the error-state EKF: F matrix, discretization, Joseph update and the update fallback."""

import sys
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))


def _random_spd(n, seed, scale=0.1):
    rng = np.random.default_rng(seed)
    A = rng.normal(0.0, scale, (n, n))
    return A @ A.T + scale ** 2 * np.eye(n)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_F_matches_finite_differences(seed):
    """assemble_F agrees with differentiated propagation through the chart."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain
    from core.filters.ekf import assemble_F
    from core.harness.checks.jacobians import numeric_F, random_epoch, random_state, relative_error

    model = arm_chain()
    rng = np.random.default_rng(seed)
    x = random_state(build_layout(model), rng)
    epoch = random_epoch(3, rng)
    assert relative_error(assemble_F(x, epoch), numeric_F(x, epoch, model.gravity)) < 1e-5


def test_F_block_structure():
    """Only the p-v, v-att, v-ba and att-bg blocks are populated."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain
    from core.filters.ekf import assemble_F
    from core.harness.checks.jacobians import random_epoch, random_state

    rng = np.random.default_rng(9)
    x = random_state(build_layout(arm_chain()), rng)
    epoch = random_epoch(3, rng)
    F = assemble_F(x, epoch)
    el = x.layout.error_links[1]
    assert_allclose(F[el.p, el.v], np.eye(3))
    assert_allclose(F[el.v, el.ba], -x.dcm(1))
    assert_allclose(F[el.att, el.bg], -x.dcm(1))
    assert np.count_nonzero(F[:, x.layout.error_camera]) == 0
    for sl in x.layout.error_segments.values():
        assert np.count_nonzero(F[sl, :]) == 0


def _van_loan(F, q_c, dt):
    from scipy.linalg import expm

    n = F.shape[0]
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -F
    M[:n, n:] = np.diag(q_c)
    M[n:, n:] = F.T
    E = expm(M * dt)
    Phi = E[n:, n:].T
    return Phi, Phi @ E[:n, n:]


def test_first_order_discretization_error_is_second_order():
    """Against the exact matrix-exponential discretization the one-step error shrinks ~4x per halved dt."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain
    from core.config import NoiseConfig
    from core.filters.base import process_noise_diag
    from core.filters.ekf import assemble_F, propagate_cov
    from core.harness.checks.jacobians import random_epoch, random_state

    layout = build_layout(arm_chain())
    rng = np.random.default_rng(4)
    x = random_state(layout, rng)
    F = assemble_F(x, random_epoch(3, rng))
    noise = NoiseConfig(sigma_a=0.1, sigma_g=0.01, q_ba=1e-4, q_bg=1e-6, q_l=1e-6)
    q_c = process_noise_diag(layout, noise, 1.0)
    P = _random_spd(layout.error_dim, 5)

    errors = []
    for dt in (2e-3, 1e-3):
        Phi, Q = _van_loan(F, q_c, dt)
        exact = Phi @ P @ Phi.T + Q
        errors.append(np.max(np.abs(propagate_cov(P, F, noise, dt, layout) - exact)))
    ratio = errors[0] / errors[1]
    assert 3.5 <= ratio <= 4.5


def test_propagate_cov_needs_layout_for_noise_config():
    """A NoiseConfig cannot be turned into Q_d without a layout."""
    from core.config import NoiseConfig
    from core.filters.ekf import propagate_cov

    with pytest.raises(ValueError):
        propagate_cov(np.eye(3), np.zeros((3, 3)), NoiseConfig(), 0.01)
    out = propagate_cov(np.eye(3), np.zeros((3, 3)), np.full(3, 0.5), 0.01)
    assert_allclose(out, 1.5 * np.eye(3))


def test_joseph_update_matches_textbook_form():
    """With the optimal gain the Joseph form equals (I − K H) P."""
    from core.filters.ekf import kalman_update

    P = _random_spd(6, 1)
    rng = np.random.default_rng(2)
    H = rng.normal(size=(3, 6))
    R = np.diag([0.01, 0.02, 0.03])
    r = rng.normal(size=3)
    e, P_new, S = kalman_update(P, H, r, R)

    K = P @ H.T @ np.linalg.inv(H @ P @ H.T + R)
    assert_allclose(S, H @ P @ H.T + R, atol=1e-12)
    assert_allclose(e, K @ r, atol=1e-10)
    assert_allclose(P_new, (np.eye(6) - K @ H) @ P, atol=1e-10)
    assert_allclose(P_new, P_new.T)


def test_scalar_textbook_update():
    """Prior N(0, 1), observation 1 with variance 1: posterior mean 0.5, variance 0.5."""
    from core.filters.ekf import kalman_update

    e, P, _ = kalman_update(np.eye(1), np.eye(1), np.ones(1), np.eye(1))
    assert e[0] == pytest.approx(0.5)
    assert P[0, 0] == pytest.approx(0.5)


def test_singular_innovation_rejected():
    """A zero-information, zero-noise observation cannot be inverted."""
    from core.exceptions import DimensionMismatchError, InnovationSingularError
    from core.filters.ekf import kalman_update

    with pytest.raises(InnovationSingularError):
        kalman_update(np.eye(3), np.zeros((1, 3)), np.ones(1), np.zeros((1, 1)))
    with pytest.raises(DimensionMismatchError):
        kalman_update(np.eye(3), np.zeros((1, 4)), np.ones(1), np.eye(1))


def _level_filter(kind="ekf", bus=None):
    from core.body.layout import build_layout
    from core.body.model import single_link
    from core.body.state import NavState
    from core.config import NoiseConfig
    from core.events import EventBus
    from core.filters import create_filter, initial_sd

    model = single_link()
    layout = build_layout(model)
    noise = NoiseConfig()
    P0 = np.diag(initial_sd(layout, noise) ** 2)
    return create_filter(kind, NavState.identity(layout), P0, noise, model.gravity, bus=bus or EventBus()), model


def test_camera_fixes_shrink_position_uncertainty():
    """A level link at rest with camera fixes tightens its position SD and stays put."""
    from core.ins.propagation import ImuEpoch
    from core.measurements.channels import CameraPositionChannel
    from core.measurements.types import PositionFix

    filt, model = _level_filter("ekf")
    sd0 = filt.position_sd()[0].copy()
    epoch = ImuEpoch(t=0.0, f_raw=-model.gravity[None, :], w_raw=np.zeros((1, 3)))
    for _ in range(50):
        filt.propagate(epoch, 0.01)
        fix = PositionFix(t=filt.t, p_c_meas=np.zeros(3), sigma=0.01)
        outcome = filt.update([CameraPositionChannel(fix)])
        assert outcome.applied == ["camera"]
    assert np.all(filt.position_sd()[0] < sd0)
    assert_allclose(filt.x.p(0), 0.0, atol=1e-3)
    assert filt.update_count == 50
    assert set(filt.mean_nis()) == {"camera"}


def test_rejected_stacked_update_falls_back_per_channel():
    """The bad channel is skipped, the good one is still applied, and events are emitted."""
    from core.events import EventBus, EventType
    from core.measurements.channels import CameraPositionChannel
    from core.measurements.types import PositionFix

    class BrokenCamera(CameraPositionChannel):
        @property
        def name(self):
            return "broken"

        def noise_var(self):
            return np.full(3, -1e6)

    bus = EventBus()
    filt, _ = _level_filter("ekf", bus)
    fix = PositionFix(t=0.0, p_c_meas=np.full(3, 0.05), sigma=0.05)
    outcome = filt.update([CameraPositionChannel(fix), BrokenCamera(fix)])

    assert outcome.rejected
    assert outcome.applied == ["camera"]
    assert outcome.skipped == ["broken"]
    assert filt.rejected_updates == 1 and filt.skipped_channels == 1
    assert len(bus.get_history(EventType.FILTER_UPDATE_REJECTED)) == 1
    assert bus.get_history(EventType.FILTER_CHANNEL_SKIPPED)[0].get("channel") == "broken"


def test_empty_update_is_a_no_op():
    """No channels, nothing happens."""
    filt, _ = _level_filter("ekf")
    before = filt.covariance()
    outcome = filt.update([])
    assert not outcome.applied and not outcome.rejected
    assert_allclose(filt.covariance(), before)


def test_divergence_guard():
    """Runaway position SD or a non-finite state raises FilterDivergenceError."""
    from core.exceptions import FilterDivergenceError

    filt, _ = _level_filter("ekf")
    filt.check_health(100.0)
    filt.P[0, 0] = 1e6
    with pytest.raises(FilterDivergenceError, match="position SD"):
        filt.check_health(100.0)
    filt.P[0, 0] = 0.01
    filt.x.vec[0] = np.nan
    with pytest.raises(FilterDivergenceError, match="non-finite"):
        filt.check_health(100.0)


def test_filter_registry():
    """Filters are created by name; unknown names are a configuration error."""
    from core.exceptions import ConfigError
    from core.filters import EkfFilter, SrukfFilter

    assert isinstance(_level_filter("ekf")[0], EkfFilter)
    assert isinstance(_level_filter("SRUKF")[0], SrukfFilter)
    with pytest.raises(ConfigError):
        _level_filter("ukf")


def test_initial_covariance_shape_checked():
    """P0 must match the error layout."""
    from core.body.layout import build_layout
    from core.body.model import single_link
    from core.body.state import NavState
    from core.config import NoiseConfig
    from core.events import EventBus
    from core.exceptions import DimensionMismatchError
    from core.filters import EkfFilter

    x0 = NavState.identity(build_layout(single_link()))
    with pytest.raises(DimensionMismatchError):
        EkfFilter(x0, np.eye(5), NoiseConfig(), np.array([0.0, 0.0, 9.81]), bus=EventBus())


def test_functional_update_matches_filter():
    """ekf_update on an EkfState gives the same posterior as the filter object."""
    from core.filters.ekf import ekf_update
    from core.measurements.channels import CameraPositionChannel, stack_jacobian, stack_noise_var
    from core.measurements.types import PositionFix

    filt, _ = _level_filter("ekf")
    channels = [CameraPositionChannel(PositionFix(t=0.0, p_c_meas=np.array([0.03, -0.02, 0.01]), sigma=0.05))]
    before = filt.state
    H = stack_jacobian(channels, before.x)
    residual = np.concatenate([c.residual(before.x) for c in channels])
    after = ekf_update(before, H, residual, np.diag(stack_noise_var(channels)))

    filt.update(channels)
    assert_allclose(after.x.vec, filt.x.vec, atol=1e-12)
    assert_allclose(after.P, filt.P, atol=1e-12)
    assert after.t == before.t


def _static_filter(kind, noise):
    from core.body.layout import build_layout
    from core.body.model import single_link
    from core.body.state import NavState
    from core.events import EventBus
    from core.filters import create_filter, initial_sd
    from core.ins.propagation import ImuEpoch

    model = single_link()
    layout = build_layout(model)
    P0 = np.diag(initial_sd(layout, noise) ** 2)
    filt = create_filter(kind, NavState.identity(layout), P0, noise, model.gravity, bus=EventBus())
    return filt, ImuEpoch(t=0.0, f_raw=-model.gravity[None, :], w_raw=np.zeros((1, 3)))


@pytest.mark.parametrize("kind", ["ekf", "srukf"])
def test_camera_nis_is_consistent(kind):
    """Matched model and noise: the normalized innovation squared averages to one."""
    from core.config import NoiseConfig
    from core.measurements.channels import CameraPositionChannel
    from core.measurements.types import PositionFix

    filt, epoch = _static_filter(kind, NoiseConfig.noiseless())
    rng = np.random.default_rng(3)
    for _ in range(1200):
        filt.propagate(epoch, 0.01)
        fix = PositionFix(t=filt.t, p_c_meas=rng.normal(0.0, 0.05, 3), sigma=0.05)
        assert filt.update([CameraPositionChannel(fix)]).applied == ["camera"]
    assert 0.7 <= filt.mean_nis()["camera"] <= 1.3


@pytest.mark.parametrize("kind", ["ekf", "srukf"])
def test_position_covariance_grows_without_fixes_and_stays_bounded_with_them(kind):
    from core.config import NoiseConfig
    from core.measurements.channels import CameraPositionChannel
    from core.measurements.types import PositionFix

    dead, epoch = _static_filter(kind, NoiseConfig())
    fused, _ = _static_filter(kind, NoiseConfig())
    dead_sd, fused_sd = [], []
    for k in range(600):
        dead.propagate(epoch, 0.01)
        fused.propagate(epoch, 0.01)
        if k % 3 == 0:
            fused.update([CameraPositionChannel(PositionFix(t=fused.t, p_c_meas=np.zeros(3), sigma=0.05))])
        dead_sd.append(np.linalg.norm(dead.position_sd()[0]))
        fused_sd.append(np.linalg.norm(fused.position_sd()[0]))

    assert np.all(np.diff(dead_sd) > 0.0)
    assert dead_sd[-1] > dead_sd[0]
    assert max(fused_sd[300:]) < dead_sd[0]
    assert max(fused_sd[300:]) <= 1.05 * max(fused_sd[200:300])
    assert fused_sd[-1] < dead_sd[-1]
