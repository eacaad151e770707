"""Causal stationarity detection on sliding IMU windows."""

from __future__ import annotations

import logging
from collections import deque

import numpy as np

from core.config import GravityMode, StationaryConfig
from core.exceptions import WindowTooShortError
from core.ins.propagation import ImuEpoch, ImuSample
from core.measurements.types import StationaryFlag

logger = logging.getLogger(__name__)

MIN_WINDOW = 0.25  # s
THETA_GYRO = 0.02  # rad/s
THETA_ACCEL = 0.08  # m/s^2


def detect_stationary(
    samples: list[ImuSample],
    gravity_norm: float = 9.81,
    theta_gyro: float = THETA_GYRO,
    theta_accel: float = THETA_ACCEL,
) -> StationaryFlag:
    """Stationary iff the gyro norm is quiet and the accel norm sits steadily at g."""
    if not samples:
        raise WindowTooShortError(0.0, MIN_WINDOW)
    t0, t1 = samples[0].t, samples[-1].t
    if t1 - t0 < MIN_WINDOW - 1e-9:
        raise WindowTooShortError(t1 - t0, MIN_WINDOW)

    f_norm = np.linalg.norm(np.array([s.f_raw for s in samples]), axis=1)
    w_norm = np.linalg.norm(np.array([s.w_raw for s in samples]), axis=1)
    still = (
        np.std(w_norm) < theta_gyro
        and abs(np.mean(f_norm) - gravity_norm) < theta_accel
        and np.std(f_norm) < theta_accel
    )
    return StationaryFlag(link_id=samples[-1].link_id, window=(t0, t1), is_stationary=bool(still))


class StationaryDetector:
    """
    Keeps one sliding window per link and re-evaluates it every epoch.

    In startup mode a link loses gravity referencing for good the first time
    it is seen moving.
    """

    def __init__(self, n_links: int, cfg: StationaryConfig | None = None, gravity_norm: float = 9.81):
        self.cfg = cfg or StationaryConfig()
        self.gravity_norm = gravity_norm
        self._windows: list[deque[ImuSample]] = [deque() for _ in range(n_links)]
        self._flags: list[StationaryFlag | None] = [None] * n_links
        self._has_moved = [False] * n_links

    def update(self, epoch: ImuEpoch) -> list[tuple[int, bool]]:
        """Ingest one epoch; returns (link, now_stationary) for links whose state changed."""
        changes = []
        for k, window in enumerate(self._windows):
            window.append(epoch.sample(k))
            while window and window[0].t <= epoch.t - self.cfg.window_s:
                window.popleft()

            warming_up = window[-1].t - window[0].t < MIN_WINDOW - 1e-9
            if warming_up:
                flag = StationaryFlag(k, (window[0].t, window[-1].t), False)
            else:
                flag = detect_stationary(
                    list(window), self.gravity_norm, self.cfg.theta_gyro, self.cfg.theta_accel,
                )
                if not flag.is_stationary:
                    self._has_moved[k] = True
            previous = self._flags[k]
            if previous is not None and previous.is_stationary != flag.is_stationary:
                changes.append((k, flag.is_stationary))
            self._flags[k] = flag
        return changes

    def flag(self, k: int) -> StationaryFlag | None:
        return self._flags[k]

    def gravity_allowed(self, k: int) -> bool:
        """Whether a gravity fix may be taken for link k right now."""
        flag = self._flags[k]
        if flag is None or not flag.is_stationary:
            return False
        if self.cfg.mode == GravityMode.STARTUP and self._has_moved[k]:
            return False
        return True
