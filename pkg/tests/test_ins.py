"""Tests for strapdown propagation and the IMU stream types."""

import sys
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

GRAVITY = np.array([0.0, 0.0, 9.81])


def test_link_at_rest_stays_put():
    """A level link reading -g stays where it is."""
    from core.ins.propagation import propagate_link
    from core.rotation import IDENTITY_QUAT

    p, v, q = np.array([1.0, 2.0, 3.0]), np.zeros(3), IDENTITY_QUAT
    for _ in range(100):
        p, v, q = propagate_link(p, v, q, -GRAVITY, np.zeros(3), 0.01, GRAVITY)
    assert_allclose(p, [1.0, 2.0, 3.0], atol=1e-12)
    assert_allclose(v, 0.0, atol=1e-12)
    assert_allclose(q, IDENTITY_QUAT, atol=1e-12)


def test_constant_acceleration_is_exact():
    """Second-order position update integrates constant acceleration exactly."""
    from core.ins.propagation import propagate_link
    from core.rotation import IDENTITY_QUAT

    accel = np.array([0.5, -0.2, 0.1])
    p, v, q = np.zeros(3), np.array([1.0, 0.0, 0.0]), IDENTITY_QUAT
    dt, steps = 0.01, 200
    for _ in range(steps):
        p, v, q = propagate_link(p, v, q, accel - GRAVITY, np.zeros(3), dt, GRAVITY)
    t = dt * steps
    assert_allclose(v, [1.0, 0.0, 0.0] + accel * t, atol=1e-12)
    assert_allclose(p, np.array([1.0, 0.0, 0.0]) * t + 0.5 * accel * t * t, atol=1e-10)


def test_attitude_uses_body_rate():
    """q' = q ⊗ exp(ω dt): the rate is expressed in the body frame."""
    from core.ins.propagation import propagate_link
    from core.rotation import quat_mul, rotvec_to_quat

    q0 = rotvec_to_quat(np.array([0.0, 0.0, np.pi / 2]))
    w = np.array([0.3, 0.0, 0.0])
    _, _, q1 = propagate_link(np.zeros(3), np.zeros(3), q0, -GRAVITY, w, 0.05, GRAVITY)
    assert_allclose(q1, quat_mul(q0, rotvec_to_quat(w * 0.05)), atol=1e-12)


def test_propagate_state_corrects_biases():
    """Biases held in the state are removed before integration, per link."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain
    from core.body.state import NavState
    from core.ins.propagation import ImuEpoch, propagate_state

    model = arm_chain()
    x = NavState.identity(build_layout(model))
    b_a = np.array([0.1, -0.2, 0.05])
    b_g = np.array([0.01, 0.0, -0.02])
    for k in range(3):
        x.set_b_a(k, b_a)
        x.set_b_g(k, b_g)
    epoch = ImuEpoch(t=0.0, f_raw=np.tile(b_a - GRAVITY, (3, 1)), w_raw=np.tile(b_g, (3, 1)))
    y = propagate_state(x, epoch, 0.01, model.gravity)
    assert_allclose(y.positions, 0.0, atol=1e-12)
    assert_allclose(y.velocities, 0.0, atol=1e-12)
    assert_allclose(y.quaternions, np.tile([1.0, 0.0, 0.0, 0.0], (3, 1)), atol=1e-12)
    assert_allclose(y.gyro_biases, x.gyro_biases)


def test_propagate_states_batched_matches_single():
    """Sigma-point stacks propagate row by row."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain
    from core.body.state import inject_batch
    from core.harness.checks.jacobians import random_epoch, random_state
    from core.ins.propagation import propagate_states

    layout = build_layout(arm_chain())
    rng = np.random.default_rng(3)
    x = random_state(layout, rng)
    epoch = random_epoch(3, rng)
    X = inject_batch(layout, x.vec, rng.normal(0.0, 0.1, (5, layout.error_dim)))
    batched = propagate_states(layout, X, epoch.f_raw, epoch.w_raw, 0.01, GRAVITY)
    for i in range(5):
        single = propagate_states(layout, X[i], epoch.f_raw, epoch.w_raw, 0.01, GRAVITY)
        assert_allclose(batched[i], single, atol=1e-12)


@pytest.mark.parametrize("dt", [0.0, -0.01, 0.5, float("nan")])
def test_invalid_step_rejected(dt):
    """Non-positive, non-finite or oversized steps raise PropagationError."""
    from core.exceptions import PropagationError
    from core.ins.propagation import propagate_link
    from core.rotation import IDENTITY_QUAT

    with pytest.raises(PropagationError):
        propagate_link(np.zeros(3), np.zeros(3), IDENTITY_QUAT, -GRAVITY, np.zeros(3), dt, GRAVITY)


def test_epoch_shape_checked():
    """An epoch for the wrong number of links is rejected."""
    from core.body.layout import build_layout
    from core.body.model import arm_chain
    from core.body.state import NavState
    from core.exceptions import DimensionMismatchError
    from core.ins.propagation import ImuEpoch, propagate_state

    x = NavState.identity(build_layout(arm_chain()))
    with pytest.raises(DimensionMismatchError):
        propagate_state(x, ImuEpoch(t=0.0, f_raw=np.zeros((2, 3)), w_raw=np.zeros((2, 3))), 0.01)


def test_correct_imu():
    """Bias correction subtracts from both sensors."""
    from core.ins.propagation import ImuSample, correct_imu

    s = ImuSample(t=0.0, link_id=0, f_raw=np.array([1.0, 2.0, 3.0]), w_raw=np.array([0.1, 0.2, 0.3]))
    f, w = correct_imu(s, np.array([1.0, 1.0, 1.0]), np.array([0.1, 0.1, 0.1]))
    assert_allclose(f, [0.0, 1.0, 2.0])
    assert_allclose(w, [0.0, 0.1, 0.2], atol=1e-12)


def test_imu_log_views():
    """ImuLog exposes rate, per-epoch stacks and per-link samples in (time, link) order."""
    from core.ins.propagation import ImuEpoch, ImuLog

    t = np.arange(5) * 0.01
    f = np.random.default_rng(0).normal(size=(5, 2, 3))
    w = np.random.default_rng(1).normal(size=(5, 2, 3))
    log = ImuLog(t=t, f_raw=f, w_raw=w)
    assert log.n_epochs == 5 and log.n_links == 2
    assert log.rate == pytest.approx(100.0)

    epoch = log.epoch(3)
    assert epoch.t == pytest.approx(0.03)
    assert_allclose(epoch.f_raw, f[3])

    samples = list(log.samples())
    assert len(samples) == 10
    assert [(s.t, s.link_id) for s in samples[:3]] == [(0.0, 0), (0.0, 1), (0.01, 0)]
    rebuilt = ImuEpoch.from_samples(list(reversed(samples[2:4])))
    assert_allclose(rebuilt.w_raw, w[1])


def _integrate_smooth(dt, duration=1.0):
    from core.ins.propagation import propagate_link
    from core.rotation import IDENTITY_QUAT

    p, v, q = np.zeros(3), np.array([0.5, 0.0, 0.0]), IDENTITY_QUAT
    for k in range(int(round(duration / dt))):
        t = k * dt
        f = np.array([0.3 * np.sin(t), 0.2 * np.cos(2.0 * t), -9.81 + 0.1 * np.sin(3.0 * t)])
        w = np.array([0.5 * np.sin(1.3 * t), 0.4 * np.cos(0.7 * t), 0.3])
        p, v, q = propagate_link(p, v, q, f, w, dt, GRAVITY)
    return p, v, q


def test_step_halving_shows_first_order_error():
    """Halving dt halves the error: successive differences shrink by a factor near 2."""
    from core.rotation import quat_angle

    runs = [_integrate_smooth(dt) for dt in (0.01, 0.005, 0.0025)]

    def gap(a, b):
        return np.linalg.norm(np.concatenate([a[0] - b[0], a[1] - b[1], [quat_angle(a[2], b[2])]]))

    coarse, fine = gap(runs[0], runs[1]), gap(runs[1], runs[2])
    assert fine > 0.0
    assert 1.7 <= coarse / fine <= 2.3
