"""Chain filters: error-state EKF and square-root UKF behind one interface."""

from __future__ import annotations

from typing import Optional

import numpy as np

from core.body.state import NavState
from core.config import FilterKind, FilterTuning, NoiseConfig
from core.events import EventBus
from core.exceptions import ConfigError
from core.filters.base import BaseFilter, UpdateOutcome, initial_sd, process_noise_diag
from core.filters.ekf import EkfFilter, EkfState
from core.filters.srukf import SrukfFilter, SrukfState

FILTERS: dict[str, type[BaseFilter]] = {
    FilterKind.EKF.value: EkfFilter,
    FilterKind.SRUKF.value: SrukfFilter,
}


def create_filter(
    kind: FilterKind | str,
    x0: NavState,
    P0: np.ndarray,
    noise: NoiseConfig,
    gravity_n: np.ndarray,
    t0: float = 0.0,
    tuning: Optional[FilterTuning] = None,
    bus: Optional[EventBus] = None,
) -> BaseFilter:
    """Instantiate a registered filter by name."""
    key = kind.value if isinstance(kind, FilterKind) else str(kind).lower()
    if key not in FILTERS:
        raise ConfigError(f"unknown filter '{kind}', choose from {sorted(FILTERS)}")
    return FILTERS[key](x0, P0, noise, gravity_n, t0=t0, tuning=tuning, bus=bus)


__all__ = [
    "BaseFilter", "UpdateOutcome", "EkfFilter", "EkfState", "SrukfFilter", "SrukfState",
    "FILTERS", "create_filter", "initial_sd", "process_noise_diag",
]
