"""Synthesized noise levels and SLAM rate match the configuration."""

from __future__ import annotations

import math

import numpy as np

from core.config import AppSettings
from core.harness.checks.base import BaseCheck, CheckResult, override
from core.simulator.sensors import synthesize_imu, synthesize_mocap, synthesize_slam
from core.simulator.trajectory import STREAM_IMU, STREAM_MOCAP, STREAM_SLAM, gen_trajectory, scenario_rngs

SD_TOLERANCE = 0.05
SLAM_RATE_BAND = (25.0, 40.0)


def noise_statistics(settings: AppSettings, duration: float) -> tuple[dict[str, tuple[float, float]], float]:
    """(measured SD, configured SD) per stream from sensor output minus the noise-free signal, and the SLAM rate."""
    cfg = settings.scenario.model_copy(update={"duration": duration})
    clean = cfg.model_copy(update={"accel_noise_density": 0.0, "gyro_noise_density": 0.0})
    gt = gen_trajectory(cfg)
    rngs = scenario_rngs(cfg.seed)

    imu = synthesize_imu(gt, cfg, rngs[STREAM_IMU])
    ref = synthesize_imu(gt, clean, np.random.default_rng(0))
    slam = synthesize_slam(gt, cfg, rngs[STREAM_SLAM])
    slam_t = np.array([f.t for f in slam])
    slam_err = np.array([f.p_c_meas for f in slam]) - gt.camera_position_at(slam_t)
    mocap = synthesize_mocap(gt, cfg, rngs[STREAM_MOCAP])
    mocap_err = np.array([f.p_c_meas for f in mocap]) - gt.camera_positions

    root_rate = math.sqrt(cfg.imu_rate)
    slam_rate = (len(slam) - 1) / (slam[-1].t - slam[0].t)
    return {
        "accel": (float(np.std(imu.f_raw - ref.f_raw)), cfg.accel_noise_density * root_rate),
        "gyro": (float(np.std(imu.w_raw - ref.w_raw)), cfg.gyro_noise_density * root_rate),
        "slam": (float(np.std(slam_err)), cfg.slam_noise_sd),
        "mocap": (float(np.std(mocap_err)), cfg.mocap_noise_sd),
    }, slam_rate


class NoiseStatisticsCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "statistics"

    @property
    def description(self) -> str:
        return "IMU, SLAM and mocap noise SDs within 5% of configured values; SLAM rate within [25, 40] Hz"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        duration = 300.0 if full else 120.0
        local = override(settings, scenario={"slam_drift_sd": 0.0})
        stats, rate = noise_statistics(local, duration)

        lines, passed = [], True
        for key, (measured, configured) in stats.items():
            if configured == 0.0:
                ok = measured == 0.0
            else:
                ok = abs(measured / configured - 1.0) <= SD_TOLERANCE
            passed &= ok
            lines.append(f"{key} {measured:.3g}/{configured:.3g}")
        lo, hi = SLAM_RATE_BAND
        rate_ok = lo <= rate <= hi if local.scenario.imu_rate == 100.0 else True
        passed &= rate_ok
        lines.append(f"SLAM rate {rate:.1f} Hz")
        return self.result(passed, ", ".join(lines), slam_rate=rate)
