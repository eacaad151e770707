"""Base class for the chain filters plus the shared noise/initialisation helpers."""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from core.body.layout import StateLayout
from core.body.state import NavState
from core.config import FilterTuning, NoiseConfig
from core.events import EventBus, EventType, get_event_bus
from core.exceptions import (
    DowndateError,
    FactorCorruptedError,
    FilterDivergenceError,
    InnovationSingularError,
)
from core.ins.propagation import ImuEpoch
from core.measurements.channels import BaseChannel, channel_slices

logger = logging.getLogger(__name__)

# Failures that reject one update without invalidating the filter
REJECTABLE = (InnovationSingularError, DowndateError, FactorCorruptedError)


def process_noise_diag(layout: StateLayout, noise: NoiseConfig, dt: float) -> np.ndarray:
    """Diagonal of Q_d: continuous PSDs times dt on the driven error blocks."""
    q = np.zeros(layout.error_dim)
    idx = layout.error_index
    q[idx["v"].ravel()] = noise.sigma_a ** 2 * dt
    q[idx["att"].ravel()] = noise.sigma_g ** 2 * dt
    q[idx["ba"].ravel()] = noise.accel_bias_psd * dt
    q[idx["bg"].ravel()] = noise.gyro_bias_psd * dt
    for sl in layout.error_segments.values():
        q[sl] = noise.q_l * dt
    q[layout.error_camera] = noise.q_l * dt
    return q * noise.process_noise_scale


def initial_sd(layout: StateLayout, noise: NoiseConfig) -> np.ndarray:
    """Per-entry initial error SD in error coordinates."""
    sd = np.zeros(layout.error_dim)
    idx = layout.error_index
    sd[idx["p"].ravel()] = noise.init_sd_position
    sd[idx["v"].ravel()] = noise.init_sd_velocity
    sd[idx["att"].ravel()] = math.radians(noise.init_sd_attitude_deg)
    sd[idx["ba"].ravel()] = noise.init_sd_accel_bias
    sd[idx["bg"].ravel()] = math.radians(noise.init_sd_gyro_bias_deg_s)
    for sl in layout.error_segments.values():
        sd[sl] = noise.init_sd_segment
    sd[layout.error_camera] = noise.init_sd_segment
    return sd


def channel_nis(
    channels: list[BaseChannel], innovation: np.ndarray, S_innov: np.ndarray,
) -> list[tuple[str, float]]:
    """Normalized innovation squared per channel from the marginal innovation blocks."""
    out = []
    for ch, sl in zip(channels, channel_slices(channels)):
        block = S_innov[sl, sl]
        r = innovation[sl]
        try:
            value = float(r @ np.linalg.solve(block, r))
        except np.linalg.LinAlgError:
            continue
        out.append((ch.kind, value / ch.dim))
    return out


@dataclass
class UpdateOutcome:
    """What happened to the channels of one epoch."""
    applied: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    rejected: bool = False


class BaseFilter(ABC):
    """
    Abstract base class for chain filters.
    EKF and SRUKF implement propagation and a stacked update; the base
    class owns the rejected-update fallback, NIS bookkeeping and the
    divergence guard.
    """

    name: str = "filter"

    def __init__(
        self,
        x0: NavState,
        noise: NoiseConfig,
        gravity_n: np.ndarray,
        t0: float = 0.0,
        tuning: Optional[FilterTuning] = None,
        bus: Optional[EventBus] = None,
    ):
        self.x = x0.copy()
        self.layout = x0.layout
        self.noise = noise
        self.gravity_n = np.asarray(gravity_n, dtype=float)
        self.tuning = tuning or FilterTuning()
        self.t = t0
        self.bus = bus or get_event_bus()

        self.rejected_updates = 0
        self.skipped_channels = 0
        self.update_count = 0
        self._nis_sum: dict[str, float] = defaultdict(float)
        self._nis_count: dict[str, int] = defaultdict(int)

    @abstractmethod
    def propagate(self, epoch: ImuEpoch, dt: float) -> None:
        """Advance mean and covariance by dt with the epoch's samples."""
        ...

    @abstractmethod
    def _update_stacked(self, channels: list[BaseChannel]) -> list[tuple[str, float]]:
        """Apply all channels as one update; atomic on failure. Returns per-channel NIS."""
        ...

    @abstractmethod
    def covariance(self) -> np.ndarray:
        """Full error covariance."""
        ...

    @abstractmethod
    def variances(self) -> np.ndarray:
        """Diagonal of the error covariance."""
        ...

    def update(self, channels: list[BaseChannel]) -> UpdateOutcome:
        """Stacked update; on rejection retry channel by channel and skip the failures."""
        outcome = UpdateOutcome()
        if not channels:
            return outcome
        try:
            self._record_nis(self._update_stacked(channels))
            outcome.applied = [c.name for c in channels]
            self.update_count += 1
            return outcome
        except REJECTABLE as e:
            outcome.rejected = True
            self.rejected_updates += 1
            logger.warning(f"[{self.name}] stacked update rejected at t={self.t:.3f}: {e.message}")
            self.bus.emit(EventType.FILTER_UPDATE_REJECTED, {
                "filter": self.name, "t": self.t, "reason": e.message,
                "channels": [c.name for c in channels],
            }, source=self.name)

        for channel in channels:
            try:
                self._record_nis(self._update_stacked([channel]))
                outcome.applied.append(channel.name)
                self.update_count += 1
            except REJECTABLE as e:
                self.skipped_channels += 1
                outcome.skipped.append(channel.name)
                logger.warning(f"[{self.name}] skipped {channel.name} at t={self.t:.3f}: {e.message}")
                self.bus.emit(EventType.FILTER_CHANNEL_SKIPPED, {
                    "filter": self.name, "t": self.t, "channel": channel.name, "reason": e.message,
                }, source=self.name)
        return outcome

    def _record_nis(self, values: list[tuple[str, float]]) -> None:
        for kind, value in values:
            self._nis_sum[kind] += value
            self._nis_count[kind] += 1

    def mean_nis(self) -> dict[str, float]:
        """Mean NIS per channel kind, normalized by the channel dimension (expectation 1)."""
        return {k: self._nis_sum[k] / self._nis_count[k] for k in sorted(self._nis_count)}

    def position_sd(self) -> np.ndarray:
        """Per-link position SDs, shape (N, 3)."""
        var = self.variances()
        return np.sqrt(np.maximum(var[self.layout.error_index["p"]], 0.0))

    def check_health(self, max_position_sd: float) -> None:
        """Raise FilterDivergenceError on non-finite values or runaway position uncertainty."""
        if not self.x.is_finite():
            raise FilterDivergenceError(self.t, "non-finite state")
        var = self.variances()
        if not np.all(np.isfinite(var)):
            raise FilterDivergenceError(self.t, "non-finite covariance")
        worst = float(np.max(self.position_sd()))
        if worst > max_position_sd:
            raise FilterDivergenceError(self.t, f"position SD {worst:.1f} m exceeds {max_position_sd:.1f} m")

    @property
    def stats(self) -> dict:
        return {
            "filter": self.name,
            "t": self.t,
            "updates": self.update_count,
            "rejected_updates": self.rejected_updates,
            "skipped_channels": self.skipped_channels,
            "mean_nis": self.mean_nis(),
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}(t={self.t:.3f}, dim={self.layout.error_dim})"
