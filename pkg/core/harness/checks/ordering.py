"""Directional variant ordering over a synthetic batch."""

from __future__ import annotations

import tempfile

import numpy as np

from core.config import AppSettings
from core.harness.batch import run_batch
from core.harness.checks.base import BaseCheck, CheckResult, override

VARIANTS = ["EKF-S", "SRUKF-S", "EKF-V", "SRUKF-V"]


class VariantOrderingCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "ordering"

    @property
    def description(self) -> str:
        return "EKF-V <= EKF-S, SRUKF-V <= SRUKF-S, and EKF degrades more from mocap to SLAM than SRUKF"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        batch = {"variants": VARIANTS}
        if not full:
            batch.update({"scenarios": 2, "duration": 60.0})
        local = override(settings, batch=batch)
        with tempfile.TemporaryDirectory() as tmp:
            table = run_batch(local, tmp)
        rmse = table.groupby("variant")["position_rmse_mean_cm"].mean().to_dict()
        missing = [v for v in VARIANTS if not np.isfinite(rmse.get(v, np.nan))]
        if missing:
            return self.result(False, f"no finished runs for {', '.join(missing)}")
        lost = {v: int(n) for v, n in table.groupby("variant")["n_diverged"].max().items() if n}
        if lost:
            detail = ", ".join(f"{v} {n}" for v, n in lost.items())
            return self.result(False, f"diverged runs: {detail}", rmse=rmse, diverged=lost)

        ekf_ratio = rmse["EKF-S"] / rmse["EKF-V"]
        ukf_ratio = rmse["SRUKF-S"] / rmse["SRUKF-V"]
        passed = rmse["EKF-V"] <= rmse["EKF-S"] and rmse["SRUKF-V"] <= rmse["SRUKF-S"] and ekf_ratio >= ukf_ratio
        summary = ", ".join(f"{v} {rmse[v]:.2f} cm" for v in VARIANTS)
        return self.result(
            passed, f"{summary}; S/V ratio ekf {ekf_ratio:.2f}, srukf {ukf_ratio:.2f}", rmse=rmse,
        )
