"""
Sensor synthesis from ground truth: IMU, SLAM-like and mocap-like position fixes.

IMU samples are the exact specific force and body rate at their stamp t_k;
the integrator holds them over [t_k, t_k+1].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.config import AppSettings, ScenarioConfig, get_settings
from core.events import EventBus, EventType, get_event_bus
from core.exceptions import ConfigError
from core.ins.propagation import ImuLog
from core.measurements.types import PositionFix
from core.simulator.trajectory import (
    STREAM_IMU,
    STREAM_MOCAP,
    STREAM_SLAM,
    GroundTruth,
    gen_trajectory,
    scenario_rngs,
)

logger = logging.getLogger(__name__)

# Reported SD never drops to zero, so noiseless streams still carry a usable weight
MIN_FIX_SIGMA = 1e-3  # m


def synthesize_imu(gt: GroundTruth, cfg: ScenarioConfig, rng: np.random.Generator) -> ImuLog:
    """
    Specific force and body rate per link for epochs 0 .. n-2, with biases and white noise.

    Values are the motion model's exact f and ω at each stamp t_k, so a
    noise-free log differs from the truth only by the integrator's own error.
    """
    if gt.motion is None:
        raise ConfigError("IMU synthesis needs the analytic motion model; loaded truth has none")
    if gt.n_epochs < 2:
        return ImuLog(t=gt.t[:0], f_raw=np.zeros((0, gt.model.n_links, 3)), w_raw=np.zeros((0, gt.model.n_links, 3)))
    sample = gt.motion.evaluate(gt.t[:-1])
    f_true = gt.motion.specific_force(sample)
    w_true = sample.w

    shape = f_true.shape
    rate = cfg.imu_rate
    f_raw = f_true + gt.accel_biases[:-1] + rng.normal(0.0, cfg.accel_noise_density * np.sqrt(rate), size=shape)
    w_raw = w_true + gt.gyro_biases[:-1] + rng.normal(0.0, cfg.gyro_noise_density * np.sqrt(rate), size=shape)
    return ImuLog(t=gt.t[:-1].copy(), f_raw=f_raw, w_raw=w_raw)


def _slam_times(cfg: ScenarioConfig, t_end: float, rng: np.random.Generator) -> np.ndarray:
    """Jittered grid at the mean SLAM rate with random dropouts."""
    period = 1.0 / cfg.slam_rate
    nominal = np.arange(0.0, t_end + 1e-12, period)
    jitter = rng.uniform(-cfg.slam_jitter, cfg.slam_jitter, size=nominal.shape) * 0.5 * period
    keep = rng.random(nominal.shape) >= cfg.slam_dropout
    times = np.clip(nominal + jitter, 0.0, t_end)[keep]
    # jitter below half a period keeps the grid ordered; equal stamps are merged
    return np.unique(times)


def synthesize_slam(
    gt: GroundTruth,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    sigma: Optional[float] = None,
) -> list[PositionFix]:
    """Irregular camera-position fixes: truth + white noise + optional random-walk drift."""
    times = _slam_times(cfg, float(gt.t[-1]), rng)
    if times.size == 0:
        return []
    truth = gt.camera_position_at(times)
    noise = rng.normal(0.0, cfg.slam_noise_sd, size=truth.shape)
    drift = np.zeros_like(truth)
    if cfg.slam_drift_sd > 0.0:
        steps = rng.normal(0.0, cfg.slam_drift_sd, size=truth.shape) * np.sqrt(np.diff(times, prepend=times[0]))[:, None]
        drift = np.cumsum(steps, axis=0)
    reported = max(sigma if sigma is not None else cfg.slam_noise_sd, MIN_FIX_SIGMA)
    meas = truth + noise + drift
    return [PositionFix(t=float(t), p_c_meas=p, sigma=reported) for t, p in zip(times, meas)]


def synthesize_mocap(
    gt: GroundTruth,
    cfg: ScenarioConfig,
    rng: np.random.Generator,
    sigma: Optional[float] = None,
) -> list[PositionFix]:
    """Motion-capture fixes of the camera point on every truth epoch."""
    truth = gt.camera_positions
    meas = truth + rng.normal(0.0, cfg.mocap_noise_sd, size=truth.shape)
    reported = max(sigma if sigma is not None else cfg.mocap_noise_sd, MIN_FIX_SIGMA)
    return [PositionFix(t=float(t), p_c_meas=p, sigma=reported) for t, p in zip(gt.t, meas)]


@dataclass
class Scenario:
    """One generated scenario: truth plus every synthesized stream."""
    truth: GroundTruth
    imu: ImuLog
    slam: list[PositionFix] = field(default_factory=list)
    mocap: list[PositionFix] = field(default_factory=list)

    @property
    def slam_rate(self) -> float:
        if len(self.slam) < 2:
            return 0.0
        return (len(self.slam) - 1) / (self.slam[-1].t - self.slam[0].t)


def simulate(
    cfg: Optional[ScenarioConfig] = None,
    settings: Optional[AppSettings] = None,
    bus: Optional[EventBus] = None,
) -> Scenario:
    """Generate truth and all streams for one seed."""
    settings = settings or get_settings()
    cfg = cfg or settings.scenario
    gt = gen_trajectory(cfg)
    rngs = scenario_rngs(cfg.seed)
    scenario = Scenario(
        truth=gt,
        imu=synthesize_imu(gt, cfg, rngs[STREAM_IMU]),
        slam=synthesize_slam(gt, cfg, rngs[STREAM_SLAM], settings.noise.sigma_slam),
        mocap=synthesize_mocap(gt, cfg, rngs[STREAM_MOCAP], settings.noise.sigma_mocap),
    )
    logger.info(
        f"Synthesized {scenario.imu.n_epochs} IMU epochs, {len(scenario.slam)} SLAM fixes "
        f"({scenario.slam_rate:.1f} Hz), {len(scenario.mocap)} mocap fixes"
    )
    (bus or get_event_bus()).emit(EventType.SCENARIO_GENERATED, {
        "seed": cfg.seed, "kind": cfg.kind.value, "path": cfg.path.value,
        "imu_epochs": scenario.imu.n_epochs, "slam_fixes": len(scenario.slam),
    }, source="simulator")
    return scenario
