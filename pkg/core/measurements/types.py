"""Value types carried between ingestion, the channel builder and the filters."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class JointKind(str, Enum):
    POSITION = "position"
    VELOCITY = "velocity"


@dataclass(frozen=True)
class PositionFix:
    """Absolute camera position in the n-frame (SLAM or motion capture)."""
    t: float
    p_c_meas: np.ndarray
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ValueError(f"fix sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class JointObservation:
    joint: tuple[int, int]
    kind: JointKind
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0.0:
            raise ValueError(f"joint sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class StationaryFlag:
    link_id: int
    window: tuple[float, float]
    is_stationary: bool
