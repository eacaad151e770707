"""Segments and gyro biases converge from a zero start."""

from __future__ import annotations

import numpy as np

from core.config import AppSettings, FilterKind, PositionSource
from core.harness.checks.base import BaseCheck, CheckResult, override
from core.harness.metrics import GYRO_BIAS_THRESHOLD, SEGMENT_THRESHOLD, Metrics
from core.harness.runner import run_scenario
from core.simulator.sensors import simulate


def final_third(metrics: Metrics) -> tuple[float, float]:
    """Worst segment error (m) and worst relative gyro-bias error over the last third of the run."""
    err = metrics.errors
    tail = err.t >= err.t[0] + (2.0 / 3.0) * (err.t[-1] - err.t[0])
    seg = max((float(np.max(e[tail])) for e in err.segments.values()), default=0.0)
    gyro = float(np.max(err.gyro_bias_rel[tail]))
    return seg, gyro


def settle_time(metrics: Metrics) -> float:
    """Latest segment convergence time; inf when a segment never settles."""
    times = metrics.segment_convergence_s.values()
    return max((t if t is not None else np.inf for t in times), default=0.0)


class ConvergenceCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "convergence"

    @property
    def description(self) -> str:
        return "segment error < 2 cm and gyro-bias error < 20% in the final third; SRUKF settles no later than EKF"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        seeds = [settings.scenario.seed + i for i in range(3 if full else 1)]
        duration = 180.0 if full else 90.0
        lines, passed = [], True
        for seed in seeds:
            settle = {}
            for kind in (FilterKind.EKF, FilterKind.SRUKF):
                local = override(
                    settings,
                    scenario={"seed": seed, "duration": duration},
                    run={"filter": kind, "position_source": PositionSource.SLAM},
                )
                metrics = run_scenario(simulate(local.scenario, local), local.run, local).metrics
                seg, gyro = final_third(metrics)
                settle[kind] = settle_time(metrics)
                ok = seg < SEGMENT_THRESHOLD and gyro < GYRO_BIAS_THRESHOLD
                passed &= ok
                lines.append(f"seed {seed} {kind.value}: segment {100 * seg:.2f} cm, gyro bias {100 * gyro:.0f}%")
            order_ok = settle[FilterKind.SRUKF] <= settle[FilterKind.EKF]
            passed &= order_ok
            lines.append(
                f"seed {seed} settle: ekf {settle[FilterKind.EKF]:.1f} s, srukf {settle[FilterKind.SRUKF]:.1f} s"
            )
        return self.result(passed, "; ".join(lines))
