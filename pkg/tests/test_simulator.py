"""Tests for the analytic arm motion, ground truth and sensor synthesis."""

import sys
from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))


def _cfg(**overrides):
    from core.config import ScenarioConfig

    values = {"duration": 20.0, "seed": 3}
    values.update(overrides)
    return ScenarioConfig(**values)


@pytest.mark.parametrize("kind, path", [("gait", "straight"), ("jump", "o_shape")])
def test_velocity_and_rate_match_finite_differences(kind, path):
    """Analytic v, a, ω and ω̇ agree with central differences of p, v, q and ω."""
    from core.body.model import arm_chain
    from core.rotation import quat_conj, quat_mul, quat_to_rotvec
    from core.simulator import MotionModel, default_segments

    model = arm_chain()
    cfg = _cfg(kind=kind, path=path)
    motion = MotionModel(model, cfg, default_segments(model))
    t = np.array([1.0, 4.3, 7.7, 8.1, 8.3, 10.15, 12.2, 12.6, 15.9])
    h = 1e-5
    lo, mid, hi = motion.evaluate(t - h), motion.evaluate(t), motion.evaluate(t + h)
    assert_allclose((hi.p - lo.p) / (2.0 * h), mid.v, atol=1e-5)
    assert_allclose((hi.v - lo.v) / (2.0 * h), mid.a, atol=1e-4)
    w_fd = quat_to_rotvec(quat_mul(quat_conj(lo.q), hi.q)) / (2.0 * h)
    assert_allclose(w_fd, mid.w, atol=1e-5)
    assert_allclose((hi.w - lo.w) / (2.0 * h), mid.dw, atol=1e-4)


def test_truth_satisfies_joint_constraints():
    """True states give zero joint position and velocity residuals."""
    from core.measurements.channels import JointPositionChannel, JointVelocityChannel
    from core.simulator import gen_trajectory

    gt = gen_trajectory(_cfg())
    for k in (0, 500, 1000, 1500):
        x = gt.state(k)
        rates = gt.w_body[k] + gt.gyro_biases[k]
        for joint in gt.model.joints:
            i, j = joint
            assert_allclose(JointPositionChannel(joint, 0.01).residual(x), 0.0, atol=1e-12)
            vel = JointVelocityChannel(joint, rates[i], rates[j], 0.01)
            assert_allclose(vel.residual(x), 0.0, atol=1e-10)


def test_truth_grid_and_labels():
    """Truth is sampled at the IMU rate over the whole duration; standstills are labelled."""
    from core.simulator import gen_trajectory

    gt = gen_trajectory(_cfg())
    assert gt.n_epochs == 2001
    assert gt.dt == pytest.approx(0.01)
    assert gt.states.shape == (2001, 63)
    assert gt.stationary[:300].all() and gt.stationary[-300:].all()
    assert not gt.stationary[1000].any()
    assert_allclose(gt.velocities[:290], 0.0, atol=1e-12)


def test_jump_lifts_the_body():
    """Jump trials lift the base link well above the gait bob (z points down)."""
    from core.simulator import gen_trajectory

    gait = gen_trajectory(_cfg()).positions[:, 0, 2]
    jump = gen_trajectory(_cfg(kind="jump")).positions[:, 0, 2]
    assert gait.min() > -0.05
    assert jump.min() < -0.2


def test_o_shape_follows_the_loop():
    """The base link stays on the configured circle."""
    from core.simulator import gen_trajectory

    gt = gen_trajectory(_cfg(path="o_shape", loop_radius=5.0))
    xy = gt.positions[:, 0, :2]
    assert_allclose(np.linalg.norm(xy - np.array([0.0, 5.0]), axis=-1), 5.0, atol=1e-9)


def test_noiseless_imu_integrates_back_to_truth():
    """Without sensor errors, 10 s of strapdown integration at 100 Hz stays within 1 mm and 1e-4 rad."""
    from core.ins.propagation import propagate_state
    from core.rotation import quat_angle
    from core.simulator import gen_trajectory, scenario_rngs, synthesize_imu

    cfg = _cfg(duration=10.0, standstill=2.0, nominal_speed=0.0).noiseless()
    gt = gen_trajectory(cfg)
    imu = synthesize_imu(gt, cfg, scenario_rngs(cfg.seed)[1])
    assert imu.n_epochs == gt.n_epochs - 1
    assert np.max(np.linalg.norm(gt.w_body, axis=-1)) > 1.0

    x = gt.state(0).copy()
    worst_pos = worst_att = 0.0
    for k, epoch in enumerate(imu.epochs()):
        x = propagate_state(x, epoch, gt.t[k + 1] - gt.t[k], gt.model.gravity)
        worst_pos = max(worst_pos, np.max(np.abs(x.positions - gt.positions[k + 1])))
        worst_att = max(worst_att, np.max(quat_angle(x.quaternions, gt.quaternions[k + 1])))
    assert np.max(np.abs(x.positions - gt.positions[-1])) < 1e-3
    assert np.max(quat_angle(x.quaternions, gt.quaternions[-1])) < 1e-4
    assert_allclose(x.velocities, gt.velocities[-1], atol=1e-3)
    # the integrator lags the rotation by half a step mid-swing, so the match is not exact
    assert worst_att > 1e-4
    assert worst_pos < 2e-2


def test_imu_samples_are_exact_at_their_stamps():
    """Noise-free f and ω equal the motion's derivatives at t_k, not interval means."""
    from core.rotation import quat_to_dcm
    from core.simulator import gen_trajectory, scenario_rngs, synthesize_imu

    cfg = _cfg().noiseless()
    gt = gen_trajectory(cfg)
    imu = synthesize_imu(gt, cfg, scenario_rngs(cfg.seed)[1])
    assert_allclose(imu.w_raw, gt.w_body[:-1], atol=1e-12)

    idx = np.array([450, 800, 1000, 1234])
    h = 1e-5
    lo, hi = gt.motion.evaluate(gt.t[idx] - h), gt.motion.evaluate(gt.t[idx] + h)
    accel = (hi.v - lo.v) / (2.0 * h)
    R = quat_to_dcm(gt.quaternions[idx])
    f_expected = np.einsum("nkji,nkj->nki", R, accel - gt.model.gravity)
    assert_allclose(imu.f_raw[idx], f_expected, atol=1e-4)


def test_noiseless_epoch_gives_zero_joint_velocity_residuals():
    from core.config import NoiseConfig
    from core.measurements.channels import JointVelocityChannel, build_channels
    from core.simulator import gen_trajectory, scenario_rngs, synthesize_imu

    cfg = _cfg().noiseless()
    gt = gen_trajectory(cfg)
    imu = synthesize_imu(gt, cfg, scenario_rngs(cfg.seed)[1])
    for k in (300, 900, 1500):
        channels = build_channels(gt.model, imu.epoch(k), NoiseConfig(), imu.rate)
        velocity = [c for c in channels if isinstance(c, JointVelocityChannel)]
        assert len(velocity) == len(gt.model.joints)
        for channel in velocity:
            assert_allclose(channel.residual(gt.state(k)), 0.0, atol=1e-10)


def test_imu_needs_motion_model():
    """Truth without its motion model (e.g. read back from files) cannot drive IMU synthesis."""
    from dataclasses import replace

    from core.exceptions import ConfigError
    from core.simulator import gen_trajectory, scenario_rngs, synthesize_imu

    cfg = _cfg(duration=8.0)
    gt = replace(gen_trajectory(cfg), motion=None)
    with pytest.raises(ConfigError, match="motion model"):
        synthesize_imu(gt, cfg, scenario_rngs(cfg.seed)[1])


def test_jump_flight_is_ballistic():
    """Between push-off and landing the base link is in free fall and peaks at the jump height."""
    from core.body.model import arm_chain
    from core.simulator import MotionModel, default_segments
    from core.simulator.motion import JUMP_HEIGHT, JUMP_PUSH

    model = arm_chain()
    motion = MotionModel(model, _cfg(kind="jump", nominal_speed=0.0), default_segments(model))
    base = model.camera_link
    t_j = motion.jump_times()[0]
    assert motion.flight_time > 0.1

    flight = motion.evaluate(t_j + JUMP_PUSH + np.linspace(0.01, motion.flight_time - 0.01, 6))
    assert_allclose(flight.a[:, base], np.tile(model.gravity, (6, 1)), atol=1e-9)
    assert_allclose(motion.specific_force(flight)[:, base], 0.0, atol=1e-9)

    apex = motion.evaluate(t_j + JUMP_PUSH + 0.5 * motion.flight_time)
    assert apex.p[0, base, 2] == pytest.approx(-JUMP_HEIGHT, abs=1e-9)
    assert_allclose(apex.v[0, base], 0.0, atol=1e-9)

    after = motion.evaluate(t_j + motion.jump_duration + 0.05)
    assert_allclose(after.p[0, base], 0.0, atol=1e-12)
    assert_allclose(after.v[0, base], 0.0, atol=1e-12)
    assert_allclose(after.a[0, base], 0.0, atol=1e-12)


def test_truth_accessors_match_state_views():
    """Stacked truth arrays and per-epoch NavState views are both plain properties."""
    from core.simulator import gen_trajectory

    gt = gen_trajectory(_cfg(duration=8.0))
    for name in ("positions", "velocities", "quaternions", "accel_biases", "gyro_biases"):
        stacked = getattr(gt, name)
        assert isinstance(stacked, np.ndarray) and stacked.shape[0] == gt.n_epochs
        for k in (0, 400, gt.n_epochs - 1):
            assert_allclose(getattr(gt.state(k), name), stacked[k])
    assert gt.camera_positions.shape == (gt.n_epochs, 3)


def test_imu_at_rest_reads_gravity_plus_bias():
    """During the opening standstill the accelerometer measures −Rᵀg + b_a."""
    from core.simulator import gen_trajectory, scenario_rngs, synthesize_imu

    cfg = _cfg(accel_noise_density=0.0, gyro_noise_density=0.0)
    gt = gen_trajectory(cfg)
    imu = synthesize_imu(gt, cfg, scenario_rngs(cfg.seed)[1])
    R0 = gt.state(10).dcm(1)
    assert_allclose(imu.f_raw[10, 1], -R0.T @ gt.model.gravity + gt.accel_biases[10, 1], atol=1e-9)
    assert_allclose(imu.w_raw[10, 1], gt.gyro_biases[10, 1], atol=1e-12)


def test_imu_noise_level():
    """Per-sample noise SD is density × √rate."""
    from core.simulator import gen_trajectory, scenario_rngs, synthesize_imu

    cfg = _cfg(accel_noise_density=0.01, gyro_noise_density=0.001)
    gt = gen_trajectory(cfg)
    clean = synthesize_imu(gt, cfg.model_copy(update={"accel_noise_density": 0.0, "gyro_noise_density": 0.0}),
                           scenario_rngs(0)[1])
    noisy = synthesize_imu(gt, cfg, scenario_rngs(0)[1])
    assert np.std(noisy.f_raw - clean.f_raw) == pytest.approx(0.1, rel=0.05)
    assert np.std(noisy.w_raw - clean.w_raw) == pytest.approx(0.01, rel=0.05)


def test_slam_stream_timing():
    """SLAM fixes arrive irregularly near a third of the IMU rate, ordered and inside the run."""
    from core.config import get_settings
    from core.simulator import simulate

    scenario = simulate(_cfg(duration=60.0), get_settings())
    times = np.array([f.t for f in scenario.slam])
    assert np.all(np.diff(times) > 0.0)
    assert times[0] >= 0.0 and times[-1] <= 60.0
    assert 25.0 <= scenario.slam_rate <= 40.0
    assert np.std(np.diff(times)) > 1e-3
    assert all(f.sigma == get_settings().noise.sigma_slam for f in scenario.slam)
    assert len(scenario.mocap) == scenario.truth.n_epochs


def test_noiseless_fixes_use_sigma_floor():
    """Zero-noise streams report the minimum fix SD instead of zero."""
    from core.simulator import MIN_FIX_SIGMA, gen_trajectory, scenario_rngs, synthesize_mocap, synthesize_slam

    cfg = _cfg().noiseless()
    gt = gen_trajectory(cfg)
    rngs = scenario_rngs(cfg.seed)
    slam = synthesize_slam(gt, cfg, rngs[2])
    mocap = synthesize_mocap(gt, cfg, rngs[3])
    assert slam[0].sigma == MIN_FIX_SIGMA
    assert mocap[0].sigma == MIN_FIX_SIGMA
    assert_allclose(mocap[5].p_c_meas, gt.camera_positions[5])
    assert_allclose(slam[3].p_c_meas, gt.camera_position_at(slam[3].t)[0])


def test_simulation_is_deterministic():
    """The same seed reproduces every stream; another seed does not."""
    from core.config import get_settings
    from core.events import EventBus, EventType
    from core.simulator import simulate

    bus = EventBus()
    a = simulate(_cfg(duration=8.0), get_settings(), bus)
    b = simulate(_cfg(duration=8.0), get_settings(), bus)
    c = simulate(_cfg(duration=8.0, seed=4), get_settings(), bus)
    assert np.array_equal(a.imu.f_raw, b.imu.f_raw)
    assert [f.t for f in a.slam] == [f.t for f in b.slam]
    assert not np.array_equal(a.imu.f_raw, c.imu.f_raw)
    assert len(bus.get_history(EventType.SCENARIO_GENERATED)) == 3


def test_segment_overrides():
    """Configured segments replace the defaults; unknown keys are rejected."""
    from core.exceptions import ConfigError
    from core.simulator import gen_trajectory

    gt = gen_trajectory(_cfg(segments={"1-2": (0.0, 0.0, 0.2)}))
    assert_allclose(gt.state(0).segment(1, 2), [0.0, 0.0, 0.2])
    with pytest.raises(ConfigError):
        gen_trajectory(_cfg(segments={"0-2": (0.0, 0.0, 0.2)}))
    with pytest.raises(ConfigError):
        gen_trajectory(_cfg(segments={"zero-one": (0.0, 0.0, 0.2)}))


def test_scenario_duration_must_cover_standstills():
    """A run shorter than both standstills is invalid."""
    from pydantic import ValidationError

    with pytest.raises(ValidationError):
        _cfg(duration=5.0)
