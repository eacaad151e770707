"""Repeated batches produce byte-identical aggregate tables."""

from __future__ import annotations

import tempfile
from pathlib import Path

from core.config import AppSettings
from core.harness.batch import run_batch
from core.harness.checks.base import BaseCheck, CheckResult, override


class DeterminismCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "determinism"

    @property
    def description(self) -> str:
        return "batch with fixed seeds writes the same aggregate.csv bytes twice"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        local = settings if full else override(
            settings, batch={"scenarios": 1, "duration": 10.0, "variants": ["EKF-S", "SRUKF-S"]},
        )
        blobs = []
        with tempfile.TemporaryDirectory() as tmp:
            for attempt in ("first", "second"):
                out = Path(tmp) / attempt
                run_batch(local, out)
                blobs.append((out / "aggregate.csv").read_bytes())
        same = blobs[0] == blobs[1]
        return self.result(same, f"aggregate.csv {'identical' if same else 'differs'} ({len(blobs[0])} bytes)")
