"""Synthetic arm scenarios: analytic motion, ground truth and sensor streams."""

from core.simulator.motion import MotionModel, MotionSample, default_segments
from core.simulator.sensors import (
    MIN_FIX_SIGMA,
    Scenario,
    simulate,
    synthesize_imu,
    synthesize_mocap,
    synthesize_slam,
)
from core.simulator.trajectory import GroundTruth, gen_trajectory, scenario_rngs

__all__ = [
    "MotionModel", "MotionSample", "default_segments", "GroundTruth", "gen_trajectory", "scenario_rngs",
    "MIN_FIX_SIGMA", "Scenario", "simulate", "synthesize_imu", "synthesize_mocap", "synthesize_slam",
]
