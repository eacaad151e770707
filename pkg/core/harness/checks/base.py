"""Base class for acceptance checks."""

from __future__ import annotations

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Optional

from core.config import AppSettings, get_settings
from core.events import EventBus, EventType, get_event_bus
from core.exceptions import FusionError

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """Outcome of one acceptance check."""
    name: str
    passed: bool
    output: str
    data: dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None
    elapsed_s: float = 0.0

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        detail = self.error or self.output
        return f"[{status}] {self.name} ({self.elapsed_s:.1f} s): {detail}"


class BaseCheck(ABC):
    """
    Every check has a name, a one-line description and two sizes:
    the reduced default for quick runs and the full-length version.
    """

    @property
    @abstractmethod
    def name(self) -> str:
        ...

    @property
    @abstractmethod
    def description(self) -> str:
        ...

    @abstractmethod
    def execute(self, settings: AppSettings, full: bool) -> CheckResult:
        ...

    def run(
        self,
        settings: Optional[AppSettings] = None,
        full: bool = False,
        bus: Optional[EventBus] = None,
    ) -> CheckResult:
        """Execute with timing; library errors become failed results."""
        settings = settings or get_settings()
        logger.info(f"Check {self.name}: {self.description}")
        start = time.perf_counter()
        try:
            result = self.execute(settings, full)
        except FusionError as e:
            result = CheckResult(self.name, False, "", error=f"{e.code}: {e.message}")
        result.elapsed_s = time.perf_counter() - start
        logger.info(str(result))
        (bus or get_event_bus()).emit(EventType.CHECK_COMPLETED, {
            "check": self.name, "passed": result.passed, "elapsed_s": result.elapsed_s,
        }, source="check")
        return result

    def result(self, passed: bool, output: str, **data: Any) -> CheckResult:
        return CheckResult(self.name, bool(passed), output, data=data)

    def __repr__(self) -> str:
        return f"Check({self.name})"


def override(
    settings: AppSettings,
    scenario: Optional[dict[str, Any]] = None,
    run: Optional[dict[str, Any]] = None,
    batch: Optional[dict[str, Any]] = None,
    noise: Optional[dict[str, Any]] = None,
) -> AppSettings:
    """Copy of settings with some section fields replaced."""
    update: dict[str, Any] = {}
    for key, values in (("scenario", scenario), ("run", run), ("batch", batch), ("noise", noise)):
        if values:
            update[key] = getattr(settings, key).model_copy(update=values)
    return settings.model_copy(update=update)
