"""The square-root factor stays a valid Cholesky factor through a full-channel run."""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from core.config import AppSettings, FilterKind, PositionSource
from core.harness.checks.base import BaseCheck, CheckResult, override
from core.harness.runner import run_scenario
from core.simulator.sensors import simulate


class SquareRootStabilityCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "stability"

    @property
    def description(self) -> str:
        return "diag(S) > 0 and chol(S Sᵀ) succeeds at every SRUKF epoch"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        local = override(
            settings,
            scenario={"duration": 180.0 if full else 20.0},
            run={"filter": FilterKind.SRUKF, "position_source": PositionSource.SLAM},
        )
        failures: list[float] = []

        def inspect(k: int, filt) -> None:
            S = filt.S
            if np.any(np.diag(S) <= 0.0):
                failures.append(filt.t)
                return
            try:
                cholesky(S @ S.T, lower=True)
            except LinAlgError:
                failures.append(filt.t)

        result = run_scenario(simulate(local.scenario, local), local.run, local, on_cycle=inspect)
        n = result.trace.n_epochs
        first = f", first at t={failures[0]:.2f} s" if failures else ""
        return self.result(not failures, f"{n} cycles, {len(failures)} factor failures{first}", failures=len(failures))
