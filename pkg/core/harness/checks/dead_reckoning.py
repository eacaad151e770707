"""Uncorrected strapdown drifts away; the SLAM-corrected filter stays bounded."""

from __future__ import annotations

import numpy as np

from core.config import AppSettings, PositionSource
from core.harness.checks.base import BaseCheck, CheckResult, override
from core.harness.runner import run_scenario
from core.simulator.sensors import simulate

DRIFT_LIMIT_M = 1.0
DRIFT_WINDOW_S = 60.0
BOUNDED_RMSE_CM = 30.0


class DeadReckoningCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "dead_reckoning"

    @property
    def description(self) -> str:
        return "no corrections: error > 1 m within 60 s; SLAM-corrected: position RMSE < 30 cm on every link"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        duration = 180.0 if full else DRIFT_WINDOW_S
        local = override(settings, scenario={"duration": duration})
        scenario = simulate(local.scenario, local)

        bare = local.run.model_copy(update={
            "position_source": PositionSource.NONE, "use_joints": False, "use_gravity": False,
            "divergence_position_sd": 1e9,
        })
        drift = run_scenario(scenario, bare, local).metrics
        window = drift.errors.t <= drift.errors.t[0] + DRIFT_WINDOW_S
        drift_max = float(np.max(drift.errors.position[window]))

        fused_run = local.run.model_copy(update={"position_source": PositionSource.SLAM})
        fused = run_scenario(scenario, fused_run, local).metrics
        worst_rmse = max(fused.position_rmse_cm)

        passed = drift_max > DRIFT_LIMIT_M and worst_rmse < BOUNDED_RMSE_CM
        return self.result(
            passed,
            f"dead reckoning max error {drift_max:.2f} m in {DRIFT_WINDOW_S:.0f} s; "
            f"{fused.variant} worst link RMSE {worst_rmse:.1f} cm",
            drift_max_m=drift_max, worst_rmse_cm=worst_rmse,
        )
