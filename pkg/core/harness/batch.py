"""
Scenario matrix: every (scenario, variant) pair on a process pool.

aggregate.csv depends only on seeds and configuration, never on timing or
completion order; wall-clock numbers go to runtime.csv.
"""

from __future__ import annotations

import concurrent.futures
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import pandas as pd

from core.config import AppSettings, BatchConfig, FilterKind, PathShape, PositionSource, ScenarioKind, get_settings
from core.events import EventBus, EventType, get_event_bus
from core.exceptions import ConfigError, FilterDivergenceError
from core.harness.metrics import Metrics, aggregate_metrics
from core.harness.runner import cycle_time_ms, run_scenario
from core.simulator.sensors import simulate

logger = logging.getLogger(__name__)

_SOURCES = {"S": PositionSource.SLAM, "V": PositionSource.MOCAP, "DR": PositionSource.NONE}


def parse_variant(name: str) -> tuple[FilterKind, PositionSource]:
    """'SRUKF-S' -> (srukf, slam)."""
    try:
        kind, source = name.strip().upper().split("-", 1)
        return FilterKind(kind.lower()), _SOURCES[source]
    except (ValueError, KeyError) as e:
        raise ConfigError(f"unknown variant '{name}', expected e.g. EKF-S or SRUKF-V") from e


def scenario_shape(index: int) -> tuple[ScenarioKind, PathShape]:
    """Every fourth scenario is a jump trial; paths alternate straight / O-shaped."""
    kind = ScenarioKind.JUMP if index % 4 == 3 else ScenarioKind.GAIT
    path = PathShape.O_SHAPE if index % 2 else PathShape.STRAIGHT
    return kind, path


def job_settings(settings: AppSettings, index: int, variant: str) -> AppSettings:
    batch = settings.batch
    kind, path = scenario_shape(index)
    filter_kind, source = parse_variant(variant)
    scenario = settings.scenario.model_copy(update={
        "seed": batch.base_seed + index, "duration": batch.duration, "kind": kind, "path": path,
    })
    run = settings.run.model_copy(update={"filter": filter_kind, "position_source": source})
    return settings.model_copy(update={"scenario": scenario, "run": run})


@dataclass
class JobResult:
    index: int
    seed: int
    variant: str
    metrics: Optional[Metrics]
    mean_cycle_ms: float
    diverged: bool = False
    reason: str = ""


def run_job(settings: AppSettings, index: int, variant: str) -> JobResult:
    """Simulate scenario `index` and replay it with one variant. Runs in a worker process."""
    local = job_settings(settings, index, variant)
    seed = local.scenario.seed
    # a private bus per job; the parent only hears BATCH_JOB_COMPLETED
    job_bus = EventBus()
    scenario = simulate(local.scenario, local, bus=job_bus)
    try:
        result = run_scenario(scenario, local.run, local, bus=job_bus)
    except FilterDivergenceError as e:
        return JobResult(index, seed, variant, None, float("nan"), diverged=True, reason=e.message)
    metrics = result.metrics
    if metrics is not None:
        metrics.errors = None
    return JobResult(index, seed, variant, metrics, cycle_time_ms(result))


def run_batch(
    settings: Optional[AppSettings] = None,
    out_dir: Optional[str | Path] = None,
    bus: Optional[EventBus] = None,
) -> pd.DataFrame:
    """
    Run the whole matrix and write aggregate.csv and runtime.csv; returns the aggregate table.

    Diverged runs are left out of the RMSE statistics and counted in the
    n_diverged column of their variant.
    """
    settings = settings or get_settings()
    batch: BatchConfig = settings.batch
    bus = bus or get_event_bus()
    out = Path(out_dir or settings.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for variant in batch.variants:
        parse_variant(variant)

    jobs = [(i, v) for i in range(batch.scenarios) for v in batch.variants]
    logger.info(f"Batch: {batch.scenarios} scenarios x {len(batch.variants)} variants on {batch.workers} workers")

    results: list[JobResult] = []
    with concurrent.futures.ProcessPoolExecutor(max_workers=batch.workers) as executor:
        futures = {executor.submit(run_job, settings, i, v): (i, v) for i, v in jobs}
        for fut in concurrent.futures.as_completed(futures):
            job = fut.result()
            results.append(job)
            if job.diverged:
                logger.warning(f"Scenario {job.index} / {job.variant} diverged: {job.reason}")
            bus.emit(EventType.BATCH_JOB_COMPLETED, {
                "index": job.index, "variant": job.variant, "diverged": job.diverged,
                "done": len(results), "total": len(jobs),
            }, source="batch")

    results.sort(key=lambda r: (r.variant, r.index))
    diverged = Counter(r.variant for r in results if r.diverged)
    table = aggregate_metrics([r.metrics for r in results if r.metrics is not None], diverged)
    table.to_csv(out / "aggregate.csv", index=False, float_format="%.17g")

    runtime = pd.DataFrame(
        [{"variant": r.variant, "seed": r.seed, "mean_cycle_ms": r.mean_cycle_ms, "diverged": r.diverged}
         for r in results],
        columns=["variant", "seed", "mean_cycle_ms", "diverged"],
    )
    runtime.to_csv(out / "runtime.csv", index=False, float_format="%.6f")
    logger.info(f"Batch finished: {sum(diverged.values())} diverged runs, tables in {out}")
    return table
