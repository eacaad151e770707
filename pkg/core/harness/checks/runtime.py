"""Cycle-time ratio of SRUKF to EKF on the arm."""

from __future__ import annotations

from core.config import AppSettings, FilterKind, PositionSource
from core.harness.checks.base import BaseCheck, CheckResult, override
from core.harness.runner import cycle_time_ms, run_scenario
from core.simulator.sensors import simulate

RATIO_BAND = (1.5, 6.0)


class RuntimeRatioCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "runtime"

    @property
    def description(self) -> str:
        return "mean SRUKF cycle time / mean EKF cycle time within [1.5, 6]"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        local = override(settings, scenario={"duration": 60.0 if full else 10.0})
        scenario = simulate(local.scenario, local)
        times = {}
        for kind in (FilterKind.EKF, FilterKind.SRUKF):
            run = local.run.model_copy(update={"filter": kind, "position_source": PositionSource.SLAM})
            times[kind] = cycle_time_ms(run_scenario(scenario, run, local))
        ratio = times[FilterKind.SRUKF] / times[FilterKind.EKF]
        lo, hi = RATIO_BAND
        return self.result(
            lo <= ratio <= hi,
            f"ekf {times[FilterKind.EKF]:.2f} ms, srukf {times[FilterKind.SRUKF]:.2f} ms, ratio {ratio:.2f}",
            ratio=ratio,
        )
