"""Ground-truth generation: sampled chain states from the analytic motion model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from core.body.layout import StateLayout, build_layout
from core.body.model import ChainModel, arm_chain
from core.body.state import NavState
from core.config import ScenarioConfig
from core.exceptions import ConfigError
from core.measurements.predictors import camera_pos_batch
from core.rotation import quat_to_dcm
from core.simulator.motion import MotionModel, default_segments

logger = logging.getLogger(__name__)

# SeedSequence children, one per random source
STREAM_BIAS, STREAM_IMU, STREAM_SLAM, STREAM_MOCAP, STREAM_PLAY, STREAM_DRIFT = range(6)


def scenario_rngs(seed: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(6)]


@dataclass
class GroundTruth:
    """True chain states on the IMU grid plus stationarity labels."""
    model: ChainModel
    t: np.ndarray                 # (n,)
    states: np.ndarray            # (n, state_dim)
    w_body: np.ndarray            # (n, N, 3) true body rates
    stationary: np.ndarray        # (n, N) bool
    motion: Optional[MotionModel] = field(default=None, repr=False)
    layout: StateLayout = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.layout = build_layout(self.model)

    @property
    def n_epochs(self) -> int:
        return self.t.shape[0]

    @property
    def dt(self) -> float:
        return float(np.median(np.diff(self.t))) if self.n_epochs > 1 else 0.0

    def state(self, k: int) -> NavState:
        return NavState(self.layout, self.states[k])

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, self.layout.state_index["p"]]

    @property
    def velocities(self) -> np.ndarray:
        return self.states[:, self.layout.state_index["v"]]

    @property
    def quaternions(self) -> np.ndarray:
        return self.states[:, self.layout.quat_state_idx]

    @property
    def accel_biases(self) -> np.ndarray:
        return self.states[:, self.layout.state_index["ba"]]

    @property
    def gyro_biases(self) -> np.ndarray:
        return self.states[:, self.layout.state_index["bg"]]

    @property
    def camera_positions(self) -> np.ndarray:
        return camera_pos_batch(self.layout, self.states)

    def camera_position_at(self, times: np.ndarray) -> np.ndarray:
        """Exact camera position at arbitrary times; nearest epoch when no motion model is attached."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.motion is None:
            idx = np.clip(np.searchsorted(self.t, times), 0, self.n_epochs - 1)
            prev = np.clip(idx - 1, 0, self.n_epochs - 1)
            idx = np.where(np.abs(self.t[prev] - times) <= np.abs(self.t[idx] - times), prev, idx)
            return self.camera_positions[idx]
        sample = self.motion.evaluate(times)
        c = self.model.camera_link
        l_c = self.states[0, self.layout.state_camera]
        return sample.p[:, c] + np.einsum("nij,j->ni", quat_to_dcm(sample.q[:, c]), l_c)


def _segment_table(model: ChainModel, cfg: ScenarioConfig) -> dict[tuple[int, int], np.ndarray]:
    segments = default_segments(model)
    for key, value in (cfg.segments or {}).items():
        try:
            owner, other = (int(part) for part in key.split("-"))
        except ValueError as e:
            raise ConfigError(f"segment key '{key}' must look like 'i-j'") from e
        if (owner, other) not in segments:
            raise ConfigError(f"segment {key} does not belong to a declared joint")
        segments[(owner, other)] = np.asarray(value, dtype=float)
    return segments


def _true_biases(cfg: ScenarioConfig, n_links: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    b_a = rng.normal(0.0, cfg.accel_bias_sd, size=(n_links, 3))
    b_g = rng.normal(0.0, cfg.gyro_bias_sd, size=(n_links, 3))
    if cfg.true_accel_biases is not None:
        b_a = np.asarray(cfg.true_accel_biases, dtype=float).reshape(n_links, 3)
    if cfg.true_gyro_biases is not None:
        b_g = np.asarray(cfg.true_gyro_biases, dtype=float).reshape(n_links, 3)
    return b_a, b_g


def _bias_drift(cfg: ScenarioConfig, n: int, n_links: int, dt: float, rng: np.random.Generator):
    """First-order Gauss-Markov drift around the constant biases, SD = bias instability."""
    if not cfg.bias_drift:
        return np.zeros((n, n_links, 3)), np.zeros((n, n_links, 3))
    phi = math.exp(-dt / cfg.bias_correlation_time)
    gain = math.sqrt(1.0 - phi ** 2)
    out = []
    for sigma in (cfg.accel_bias_instability, cfg.gyro_bias_instability):
        kicks = rng.normal(0.0, sigma * gain, size=(n, n_links, 3))
        kicks[0] = 0.0
        out.append(lfilter([1.0], [1.0, -phi], kicks, axis=0))
    return out[0], out[1]


def gen_trajectory(cfg: ScenarioConfig, model: Optional[ChainModel] = None) -> GroundTruth:
    """Sample the scenario's analytic motion on the IMU grid, t = 0 .. duration."""
    model = model or arm_chain()
    layout = build_layout(model)
    rngs = scenario_rngs(cfg.seed)
    n = int(round(cfg.duration * cfg.imu_rate)) + 1
    t = np.arange(n) / cfg.imu_rate

    segments = _segment_table(model, cfg)
    motion = MotionModel(model, cfg, segments, rngs[STREAM_PLAY])
    sample = motion.evaluate(t)

    b_a, b_g = _true_biases(cfg, model.n_links, rngs[STREAM_BIAS])
    d_a, d_g = _bias_drift(cfg, n, model.n_links, 1.0 / cfg.imu_rate, rngs[STREAM_DRIFT])

    idx = layout.state_index
    states = np.zeros((n, layout.state_dim))
    states[:, idx["p"]] = sample.p
    states[:, idx["v"]] = sample.v
    states[:, idx["att"]] = sample.q
    states[:, idx["ba"]] = b_a[None] + d_a
    states[:, idx["bg"]] = b_g[None] + d_g
    for key, sl in layout.state_segments.items():
        states[:, sl] = segments[key]
    states[:, layout.state_camera] = np.asarray(cfg.camera_lever_arm, dtype=float)

    labels = np.repeat(motion.stationary(t)[:, None], model.n_links, axis=1)
    logger.info(
        f"Generated {cfg.kind.value}/{cfg.path.value} scenario: {n} epochs, "
        f"{motion.travel():.1f} m travelled, seed {cfg.seed}"
    )
    return GroundTruth(model=model, t=t, states=states, w_body=sample.w, stationary=labels, motion=motion)
