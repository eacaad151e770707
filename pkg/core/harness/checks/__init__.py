"""Acceptance suite: one check per criterion, reduced by default, full-length on request."""

from __future__ import annotations

import logging
from typing import Iterable, Optional

from core.config import AppSettings, get_settings
from core.events import EventBus
from core.exceptions import ConfigError
from core.harness.checks.base import BaseCheck, CheckResult, override
from core.harness.checks.census import StateCensusCheck
from core.harness.checks.convergence import ConvergenceCheck
from core.harness.checks.dead_reckoning import DeadReckoningCheck
from core.harness.checks.determinism import DeterminismCheck
from core.harness.checks.equivalence import FilterEquivalenceCheck
from core.harness.checks.jacobians import JacobianCheck
from core.harness.checks.ordering import VariantOrderingCheck
from core.harness.checks.runtime import RuntimeRatioCheck
from core.harness.checks.stability import SquareRootStabilityCheck
from core.harness.checks.statistics import NoiseStatisticsCheck

logger = logging.getLogger(__name__)

ALL_CHECKS: list[BaseCheck] = [
    StateCensusCheck(),
    JacobianCheck(),
    FilterEquivalenceCheck(),
    SquareRootStabilityCheck(),
    ConvergenceCheck(),
    VariantOrderingCheck(),
    RuntimeRatioCheck(),
    DeadReckoningCheck(),
    DeterminismCheck(),
    NoiseStatisticsCheck(),
]


def get_check(name: str) -> BaseCheck:
    for check in ALL_CHECKS:
        if check.name == name:
            return check
    raise ConfigError(f"unknown check '{name}', choose from {[c.name for c in ALL_CHECKS]}")


def run_checks(
    names: Optional[Iterable[str]] = None,
    full: bool = False,
    settings: Optional[AppSettings] = None,
    bus: Optional[EventBus] = None,
) -> list[CheckResult]:
    """Run the selected checks (all by default) in suite order."""
    settings = settings or get_settings()
    checks = [get_check(n) for n in names] if names else ALL_CHECKS
    results = [check.run(settings, full, bus) for check in checks]
    passed = sum(r.passed for r in results)
    logger.info(f"Checks: {passed}/{len(results)} passed")
    return results


__all__ = ["ALL_CHECKS", "BaseCheck", "CheckResult", "get_check", "override", "run_checks"]
