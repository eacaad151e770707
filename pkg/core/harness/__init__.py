"""Stream records, replay runner, metrics, batch matrix and acceptance checks."""

from core.harness.batch import parse_variant, run_batch
from core.harness.metrics import EstimateTrace, Metrics, aggregate_metrics, compute_metrics
from core.harness.records import build_event_queue, ingest_streams, load_truth, save_truth, write_scenario
from core.harness.reports import write_run_outputs
from core.harness.runner import FilterRun, RunResult, run_filter, run_scenario

__all__ = [
    "EstimateTrace", "FilterRun", "Metrics", "RunResult", "aggregate_metrics", "build_event_queue",
    "compute_metrics", "ingest_streams", "load_truth", "parse_variant", "run_batch", "run_filter",
    "run_scenario", "save_truth", "write_run_outputs", "write_scenario",
]
