"""Error traces, per-run metrics and the per-variant aggregate table."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from core.body.layout import StateLayout
from core.exceptions import AlignmentError
from core.rotation import quat_angle, quat_to_euler
from core.simulator.trajectory import GroundTruth

logger = logging.getLogger(__name__)

SEGMENT_THRESHOLD = 0.02      # m
GYRO_BIAS_THRESHOLD = 0.20    # fraction of |b_true|
ACCEL_BIAS_THRESHOLD = 0.30


@dataclass
class EstimateTrace:
    """Filter output recorded once per IMU epoch, after that epoch's corrections."""
    layout: StateLayout
    t: np.ndarray              # (n,)
    states: np.ndarray         # (n, state_dim)
    position_sd: np.ndarray    # (n, N, 3)
    cycle_times: np.ndarray    # (n,) s

    @property
    def n_epochs(self) -> int:
        return self.t.shape[0]

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, self.layout.state_index["p"]]

    @property
    def quaternions(self) -> np.ndarray:
        return self.states[:, self.layout.quat_state_idx]


@dataclass
class ErrorTraces:
    t: np.ndarray
    position: np.ndarray       # (n, N) m, vector norm
    attitude_deg: np.ndarray   # (n, N) total rotation angle
    euler_deg: np.ndarray      # (n, N, 3) roll, pitch, yaw
    segments: dict[str, np.ndarray]
    gyro_bias_rel: np.ndarray  # (n, N)
    accel_bias_rel: np.ndarray


class Metrics(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    variant: str = ""
    seed: Optional[int] = None
    links: list[str] = Field(default_factory=list)
    n_epochs: int = 0
    duration_s: float = 0.0

    position_rmse_cm: list[float] = Field(default_factory=list)
    attitude_rmse_deg: list[float] = Field(default_factory=list)
    euler_rmse_deg: list[list[float]] = Field(default_factory=list)
    max_position_error_m: list[float] = Field(default_factory=list)

    segment_convergence_s: dict[str, Optional[float]] = Field(default_factory=dict)
    final_segment_error_cm: dict[str, float] = Field(default_factory=dict)
    gyro_bias_convergence_s: list[Optional[float]] = Field(default_factory=list)
    accel_bias_convergence_s: list[Optional[float]] = Field(default_factory=list)

    mean_cycle_ms: float = 0.0
    mean_nis: dict[str, float] = Field(default_factory=dict)
    rejected_updates: int = 0
    skipped_channels: int = 0

    errors: Optional[ErrorTraces] = Field(default=None, exclude=True, repr=False)

    @property
    def mean_position_rmse_cm(self) -> float:
        return float(np.mean(self.position_rmse_cm)) if self.position_rmse_cm else math.nan


def align(est_t: np.ndarray, truth_t: np.ndarray) -> np.ndarray:
    """Truth index nearest to every estimate epoch; skew must stay within half a truth step."""
    if est_t.size == 0 or truth_t.size == 0:
        raise AlignmentError("empty trace")
    idx = np.clip(np.searchsorted(truth_t, est_t), 0, truth_t.size - 1)
    prev = np.clip(idx - 1, 0, truth_t.size - 1)
    idx = np.where(np.abs(truth_t[prev] - est_t) <= np.abs(truth_t[idx] - est_t), prev, idx)
    half = 0.5 * (float(np.median(np.diff(truth_t))) if truth_t.size > 1 else 0.0)
    skew = float(np.max(np.abs(truth_t[idx] - est_t)))
    if skew > half + 1e-9:
        raise AlignmentError(f"max skew {skew:.4f} s exceeds {half:.4f} s")
    return idx


def _wrap(angle: np.ndarray) -> np.ndarray:
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


def _relative(err: np.ndarray, ref: np.ndarray) -> np.ndarray:
    scale = np.linalg.norm(ref, axis=-1)
    return np.linalg.norm(err, axis=-1) / np.where(scale > 0.0, scale, np.inf)


def compute_errors(trace: EstimateTrace, truth: GroundTruth) -> ErrorTraces:
    idx = align(trace.t, truth.t)
    layout = trace.layout
    true_states = truth.states[idx]
    si = layout.state_index

    q_est, q_true = trace.quaternions, true_states[:, layout.quat_state_idx]
    euler = _wrap(quat_to_euler(q_est) - quat_to_euler(q_true))
    segments = {
        f"l[{i},{j}]": np.linalg.norm(trace.states[:, sl] - true_states[:, sl], axis=-1)
        for (i, j), sl in layout.state_segments.items()
    }
    return ErrorTraces(
        t=trace.t,
        position=np.linalg.norm(trace.positions - true_states[:, si["p"]], axis=-1),
        attitude_deg=np.degrees(quat_angle(q_true, q_est)),
        euler_deg=np.degrees(euler),
        segments=segments,
        gyro_bias_rel=_relative(trace.states[:, si["bg"]] - true_states[:, si["bg"]], true_states[:, si["bg"]]),
        accel_bias_rel=_relative(trace.states[:, si["ba"]] - true_states[:, si["ba"]], true_states[:, si["ba"]]),
    )


def convergence_time(t: np.ndarray, err: np.ndarray, threshold: float) -> Optional[float]:
    """First time after which err stays below threshold; None if it never settles."""
    bad = np.flatnonzero(~(err < threshold))
    if bad.size == 0:
        return float(t[0])
    if bad[-1] == t.size - 1:
        return None
    return float(t[bad[-1] + 1])


def _rms(x: np.ndarray, axis: int = 0) -> np.ndarray:
    return np.sqrt(np.mean(np.square(x), axis=axis))


def compute_metrics(
    trace: EstimateTrace,
    truth: GroundTruth,
    variant: str = "",
    seed: Optional[int] = None,
    mean_nis: Optional[dict[str, float]] = None,
    rejected_updates: int = 0,
    skipped_channels: int = 0,
) -> Metrics:
    """Per-link RMSEs over the whole run, convergence times and runtime."""
    err = compute_errors(trace, truth)
    n_links = trace.layout.n_links
    return Metrics(
        variant=variant,
        seed=seed,
        links=truth.model.labels,
        n_epochs=trace.n_epochs,
        duration_s=float(trace.t[-1] - trace.t[0]),
        position_rmse_cm=(100.0 * _rms(err.position)).tolist(),
        attitude_rmse_deg=_rms(err.attitude_deg).tolist(),
        euler_rmse_deg=_rms(err.euler_deg).tolist(),
        max_position_error_m=np.max(err.position, axis=0).tolist(),
        segment_convergence_s={k: convergence_time(err.t, e, SEGMENT_THRESHOLD) for k, e in err.segments.items()},
        final_segment_error_cm={k: float(100.0 * e[-1]) for k, e in err.segments.items()},
        gyro_bias_convergence_s=[
            convergence_time(err.t, err.gyro_bias_rel[:, k], GYRO_BIAS_THRESHOLD) for k in range(n_links)
        ],
        accel_bias_convergence_s=[
            convergence_time(err.t, err.accel_bias_rel[:, k], ACCEL_BIAS_THRESHOLD) for k in range(n_links)
        ],
        mean_cycle_ms=float(1e3 * np.mean(trace.cycle_times)) if trace.cycle_times.size else 0.0,
        mean_nis=dict(mean_nis or {}),
        rejected_updates=rejected_updates,
        skipped_channels=skipped_channels,
        errors=err,
    )


def metrics_frame(results: list[Metrics]) -> pd.DataFrame:
    """One row per (run, link)."""
    rows = []
    for m in results:
        for k, label in enumerate(m.links):
            rows.append({
                "variant": m.variant,
                "seed": m.seed,
                "link": label,
                "position_rmse_cm": m.position_rmse_cm[k],
                "attitude_rmse_deg": m.attitude_rmse_deg[k],
            })
    return pd.DataFrame(rows, columns=["variant", "seed", "link", "position_rmse_cm", "attitude_rmse_deg"])


def _sd(s: pd.Series) -> float:
    return float(np.std(s.to_numpy()))


def aggregate_metrics(results: list[Metrics], diverged: Optional[dict[str, int]] = None) -> pd.DataFrame:
    """
    Mean/SD/min/max of position and attitude RMSE per variant and link (population SD).

    `diverged` counts, per variant, the runs that stopped without metrics.
    Every counted variant keeps a row (link "-") even when none of its runs finished.
    """
    frame = metrics_frame(results)
    table = frame.groupby(["variant", "link"], sort=True).agg(
        runs=("seed", "size"),
        position_rmse_mean_cm=("position_rmse_cm", "mean"),
        position_rmse_sd_cm=("position_rmse_cm", _sd),
        position_rmse_min_cm=("position_rmse_cm", "min"),
        position_rmse_max_cm=("position_rmse_cm", "max"),
        attitude_rmse_mean_deg=("attitude_rmse_deg", "mean"),
        attitude_rmse_sd_deg=("attitude_rmse_deg", _sd),
        attitude_rmse_min_deg=("attitude_rmse_deg", "min"),
        attitude_rmse_max_deg=("attitude_rmse_deg", "max"),
    ).reset_index()
    counts = pd.DataFrame(sorted((diverged or {}).items()), columns=["variant", "n_diverged"])
    table = table.merge(counts, on="variant", how="outer")
    table["runs"] = table["runs"].fillna(0).astype(int)
    table["n_diverged"] = table["n_diverged"].fillna(0).astype(int)
    table["link"] = table["link"].fillna("-")
    return table.sort_values(["variant", "link"], kind="stable").reset_index(drop=True)
