"""Error-state and quaternion-state dimensions of the arm."""

from __future__ import annotations

from core.body.layout import build_layout
from core.body.model import arm_chain
from core.config import AppSettings
from core.harness.checks.base import BaseCheck, CheckResult

ERROR_DIM = 60
STATE_DIM = 63
CENSUS = (27, 33)


class StateCensusCheck(BaseCheck):

    @property
    def name(self) -> str:
        return "census"

    @property
    def description(self) -> str:
        return "arm chain has 60 error states (27 variables + 33 constants) and 63 quaternion states"

    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        layout = build_layout(arm_chain())
        census = layout.census()
        passed = layout.error_dim == ERROR_DIM and layout.state_dim == STATE_DIM and tuple(census) == CENSUS
        return self.result(
            passed,
            f"error_dim={layout.error_dim}, state_dim={layout.state_dim}, census={tuple(census)}",
            error_dim=layout.error_dim, state_dim=layout.state_dim,
        )
