"""Plot-ready trace files and metric summaries for one run."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from core.harness.metrics import Metrics, align
from core.harness.runner import RunResult
from core.rotation import quat_to_euler
from core.simulator.trajectory import GroundTruth

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def trace_frame(result: RunResult, truth: Optional[GroundTruth] = None) -> pd.DataFrame:
    """Estimated position, Euler attitude (deg) and position SD per link; truth and errors when known."""
    trace = result.trace
    labels = [f"link{k}" for k in range(trace.layout.n_links)]
    columns: dict[str, np.ndarray] = {"t": trace.t}

    pos = trace.positions
    euler = np.degrees(quat_to_euler(trace.quaternions))
    true_pos = true_euler = None
    if truth is not None:
        idx = align(trace.t, truth.t)
        true_pos = truth.positions[idx]
        true_euler = np.degrees(quat_to_euler(truth.quaternions[idx]))

    for k, name in enumerate(labels):
        for a, axis in enumerate("xyz"):
            columns[f"{name}_p{axis}"] = pos[:, k, a]
        for a, axis in enumerate(("roll", "pitch", "yaw")):
            columns[f"{name}_{axis}_deg"] = euler[:, k, a]
        for a, axis in enumerate("xyz"):
            columns[f"{name}_sd_p{axis}"] = trace.position_sd[:, k, a]
        if true_pos is not None:
            for a, axis in enumerate("xyz"):
                columns[f"{name}_true_p{axis}"] = true_pos[:, k, a]
            for a, axis in enumerate(("roll", "pitch", "yaw")):
                columns[f"{name}_true_{axis}_deg"] = true_euler[:, k, a]

    metrics = result.metrics
    if metrics is not None and metrics.errors is not None:
        for k, name in enumerate(labels):
            columns[f"{name}_pos_err_m"] = metrics.errors.position[:, k]
            columns[f"{name}_att_err_deg"] = metrics.errors.attitude_deg[:, k]
    return pd.DataFrame(columns)


def write_trace(path: str | Path, result: RunResult, truth: Optional[GroundTruth] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(result, truth).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_metrics(path: str | Path, metrics: Metrics, stats: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = metrics.model_dump(mode="json")
    if stats:
        payload["filter_stats"] = stats
    path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    return path


def write_run_outputs(out_dir: str | Path, result: RunResult, truth: Optional[GroundTruth] = None) -> dict[str, Path]:
    out = Path(out_dir)
    paths = {"trace": write_trace(out / "trace.csv", result, truth)}
    if result.metrics is not None:
        paths["metrics"] = write_metrics(out / "metrics.json", result.metrics, result.stats)
    else:
        stats_path = out / "stats.json"
        stats_path.write_text(json.dumps(result.stats, indent=2, sort_keys=True), encoding="utf-8")
        paths["stats"] = stats_path
    logger.info(f"Wrote {', '.join(p.name for p in paths.values())} to {out}")
    return paths


def format_metrics(metrics: Metrics) -> str:
    """Human-readable per-link summary for the console."""
    lines = [f"{metrics.variant}  ({metrics.n_epochs} epochs, {metrics.mean_cycle_ms:.2f} ms/cycle)"]
    for k, label in enumerate(metrics.links):
        lines.append(
            f"  {label:<10} position RMSE {metrics.position_rmse_cm[k]:7.2f} cm   "
            f"attitude RMSE {metrics.attitude_rmse_deg[k]:6.2f} deg"
        )
    for key, value in metrics.final_segment_error_cm.items():
        lines.append(f"  {key:<10} final error {value:6.2f} cm")
    if metrics.mean_nis:
        nis = ", ".join(f"{k} {v:.2f}" for k, v in metrics.mean_nis.items())
        lines.append(f"  mean NIS: {nis}")
    return "\n".join(lines)
