"""
Replay driver: initial state, the per-epoch filter cycle, and run outputs.

Each IMU epoch k runs one cycle:
    stationarity update -> corrections at t_k -> record -> propagate to t_k+1
Position fixes are applied at the IMU epoch nearest their timestamp.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from core.body.layout import build_layout
from core.body.model import ChainModel
from core.body.state import NavState
from core.config import AppSettings, InitPolicy, PositionSource, RunConfig, get_settings
from core.events import EventBus, EventType, get_event_bus
from core.exceptions import ConfigError, EmptyStreamError, FilterDivergenceError
from core.filters import BaseFilter, create_filter, initial_sd
from core.harness.metrics import EstimateTrace, Metrics, compute_metrics
from core.harness.records import EventQueue, build_event_queue, ingest_streams, load_truth
from core.ins.propagation import ImuLog
from core.measurements.channels import build_channels
from core.measurements.stationary import StationaryDetector
from core.measurements.types import PositionFix
from core.rotation import euler_to_quat
from core.simulator.sensors import Scenario
from core.simulator.trajectory import GroundTruth

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    variant: str
    trace: EstimateTrace
    stats: dict = field(default_factory=dict)
    metrics: Optional[Metrics] = None


def level_attitudes(imu: ImuLog, window_s: float) -> np.ndarray:
    """Roll and pitch per link from the mean specific force over the initial window; yaw = 0."""
    mask = imu.t - imu.t[0] < window_s
    f = np.mean(imu.f_raw[mask], axis=0)
    roll = np.arctan2(-f[:, 1], -f[:, 2])
    pitch = np.arctan2(f[:, 0], np.hypot(f[:, 1], f[:, 2]))
    return euler_to_quat(np.zeros_like(roll), pitch, roll)


def initial_state(
    model: ChainModel,
    imu: ImuLog,
    fixes: list[PositionFix],
    run: RunConfig,
    truth: Optional[GroundTruth] = None,
) -> NavState:
    """Starting estimate for the configured policy."""
    layout = build_layout(model)
    if run.init_policy == InitPolicy.TRUTH:
        if truth is None:
            raise ConfigError("init policy 'truth' needs a truth file")
        k = int(np.argmin(np.abs(truth.t - imu.t[0])))
        return NavState(layout, truth.states[k].copy())

    x = NavState.identity(layout)
    p0 = np.asarray(fixes[0].p_c_meas, dtype=float) if fixes else np.zeros(3)
    q0 = level_attitudes(imu, run.init_window_s)
    for k in range(model.n_links):
        x.set_p(k, p0)
        x.set_q(k, q0[k])
    return x


def _fixes_for(run: RunConfig, scenario: Scenario) -> list[PositionFix]:
    if run.position_source == PositionSource.SLAM:
        return scenario.slam
    if run.position_source == PositionSource.MOCAP:
        return scenario.mocap
    return []


class FilterRun:
    """One deterministic replay of a queue through one filter."""

    def __init__(
        self,
        model: ChainModel,
        queue: EventQueue,
        run: Optional[RunConfig] = None,
        settings: Optional[AppSettings] = None,
        truth: Optional[GroundTruth] = None,
        bus: Optional[EventBus] = None,
        on_cycle: Optional[Callable[[int, BaseFilter], None]] = None,
    ):
        self.settings = settings or get_settings()
        self.run = run or self.settings.run
        self.model = model
        self.queue = queue
        self.truth = truth
        self.bus = bus or get_event_bus()
        self.on_cycle = on_cycle
        self.layout = build_layout(model)
        if queue.imu.n_epochs == 0:
            raise EmptyStreamError("imu")
        if queue.imu.n_links != model.n_links:
            raise ConfigError(f"IMU log has {queue.imu.n_links} links, chain has {model.n_links}")

    def build_filter(self) -> BaseFilter:
        x0 = initial_state(self.model, self.queue.imu, self.queue.fixes, self.run, self.truth)
        P0 = np.diag(initial_sd(self.layout, self.settings.noise) ** 2)
        return create_filter(
            self.run.filter, x0, P0, self.settings.noise, self.model.gravity,
            t0=float(self.queue.imu.t[0]), tuning=self.settings.tuning, bus=self.bus,
        )

    def execute(self) -> RunResult:
        imu = self.queue.imu
        n = imu.n_epochs
        noise = self.settings.noise
        rate = imu.rate or self.settings.scenario.imu_rate
        variant = self.run.variant

        filt = self.build_filter()
        detector = StationaryDetector(
            self.model.n_links, self.settings.stationary, float(np.linalg.norm(self.model.gravity)),
        )
        states = np.empty((n, self.layout.state_dim))
        pos_sd = np.empty((n, self.model.n_links, 3))
        cycles = np.empty(n)

        logger.info(f"Run {variant}: {n} epochs, {len(self.queue.fixes)} fixes, {filt!r}")
        self.bus.emit(EventType.RUN_STARTED, {"variant": variant, "epochs": n}, source="runner")

        try:
            for k, epoch, fixes in self.queue.epochs():
                start = time.perf_counter()
                for link, now in detector.update(epoch):
                    self.bus.emit(EventType.STATIONARY_CHANGED, {
                        "link": link, "stationary": now, "t": epoch.t,
                    }, source="runner")
                gravity_links = [
                    link for link in range(self.model.n_links)
                    if self.run.use_gravity and detector.gravity_allowed(link)
                ]
                channels = build_channels(
                    self.model, epoch, noise, rate,
                    stationary_links=gravity_links,
                    fixes=fixes,
                    use_joints=self.run.use_joints,
                    joint_velocity=k % self.run.joint_velocity_every == 0,
                )
                filt.t = epoch.t
                filt.update(channels)
                elapsed = time.perf_counter() - start

                states[k] = filt.x.vec
                pos_sd[k] = filt.position_sd()

                if k + 1 < n:
                    start = time.perf_counter()
                    filt.propagate(epoch, float(imu.t[k + 1] - imu.t[k]))
                    elapsed += time.perf_counter() - start
                cycles[k] = elapsed
                filt.check_health(self.run.divergence_position_sd)
                if self.on_cycle is not None:
                    self.on_cycle(k, filt)
        except FilterDivergenceError as e:
            logger.error(f"Run {variant} diverged: {e.message}")
            self.bus.emit(EventType.RUN_DIVERGED, {"variant": variant, "t": e.t, "reason": e.message}, source="runner")
            raise

        trace = EstimateTrace(layout=self.layout, t=imu.t.copy(), states=states, position_sd=pos_sd, cycle_times=cycles)
        result = RunResult(variant=variant, trace=trace, stats=filt.stats)
        if self.truth is not None:
            result.metrics = compute_metrics(
                trace, self.truth,
                variant=variant,
                seed=self.settings.scenario.seed,
                mean_nis=filt.mean_nis(),
                rejected_updates=filt.rejected_updates,
                skipped_channels=filt.skipped_channels,
            )
        summary = {"variant": variant, "epochs": n, "mean_cycle_ms": 1e3 * float(np.mean(cycles)), **filt.stats}
        if result.metrics is not None:
            summary["mean_position_rmse_cm"] = result.metrics.mean_position_rmse_cm
        logger.info(
            f"Run {variant} done: {n} epochs, {summary['mean_cycle_ms']:.2f} ms/cycle, "
            f"{filt.rejected_updates} rejected updates"
        )
        self.bus.emit(EventType.RUN_COMPLETED, summary, source="runner")
        return result


def run_scenario(
    scenario: Scenario,
    run: Optional[RunConfig] = None,
    settings: Optional[AppSettings] = None,
    bus: Optional[EventBus] = None,
    on_cycle: Optional[Callable[[int, BaseFilter], None]] = None,
) -> RunResult:
    """Replay an in-memory simulated scenario."""
    settings = settings or get_settings()
    run = run or settings.run
    queue = build_event_queue(scenario.imu, _fixes_for(run, scenario))
    return FilterRun(scenario.truth.model, queue, run, settings, scenario.truth, bus, on_cycle).execute()


def run_filter(
    run: Optional[RunConfig] = None,
    settings: Optional[AppSettings] = None,
    bus: Optional[EventBus] = None,
) -> RunResult:
    """Replay recorded stream files described by the run config."""
    settings = settings or get_settings()
    run = run or settings.run
    if not run.imu_path:
        raise ConfigError("RUN_IMU_PATH is required")

    model = ChainModel.from_file(run.chain_file) if run.chain_file else ChainModel.from_config(settings.chain)
    fix_path = {
        PositionSource.SLAM: run.slam_path,
        PositionSource.MOCAP: run.mocap_path,
        PositionSource.NONE: None,
    }[run.position_source]
    if run.position_source != PositionSource.NONE and not fix_path:
        raise ConfigError(f"position source '{run.position_source.value}' needs a stream path")

    queue = ingest_streams(run.imu_path, model.n_links, fix_path)
    truth = load_truth(run.truth_path) if run.truth_path else None
    if truth is not None and truth.model != model:
        logger.warning("Truth chain model differs from the run chain model")
    return FilterRun(model, queue, run, settings, truth, bus).execute()


def cycle_time_ms(result: RunResult) -> float:
    cycles = result.trace.cycle_times
    return 1e3 * float(np.mean(cycles)) if cycles.size else math.nan


def output_dir(run: RunConfig, name: Optional[str] = None) -> Path:
    out = Path(run.output_dir) / (name or run.variant)
    out.mkdir(parents=True, exist_ok=True)
    return out
