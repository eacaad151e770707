"""
Strapdown propagation: bias correction and one integration step per link.

    a = R(q) f̂ + g
    v' = v + a dt
    p' = p + v dt + ½ a dt²
    q' = q ⊗ exp(ŵ dt)

Earth rotation is neglected. All functions broadcast over leading axes, so
links (N, 3) and sigma points (n, N, 3) share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.body.layout import StateLayout
from core.body.model import DEFAULT_GRAVITY
from core.body.state import NavState
from core.exceptions import DimensionMismatchError, PropagationError
from core.rotation import quat_mul, quat_to_dcm, rotvec_to_quat

MAX_STEP = 0.1  # s


@dataclass(frozen=True)
class ImuSample:
    """One accelerometer/gyro reading of one link."""
    t: float
    link_id: int
    f_raw: np.ndarray
    w_raw: np.ndarray


@dataclass(frozen=True)
class ImuEpoch:
    """Samples of every link at one epoch, stacked (N, 3)."""
    t: float
    f_raw: np.ndarray
    w_raw: np.ndarray

    @classmethod
    def from_samples(cls, samples: list[ImuSample]) -> "ImuEpoch":
        ordered = sorted(samples, key=lambda s: s.link_id)
        return cls(
            t=ordered[0].t,
            f_raw=np.array([s.f_raw for s in ordered], dtype=float),
            w_raw=np.array([s.w_raw for s in ordered], dtype=float),
        )

    @property
    def n_links(self) -> int:
        return self.f_raw.shape[0]

    def sample(self, k: int) -> ImuSample:
        return ImuSample(t=self.t, link_id=k, f_raw=self.f_raw[k], w_raw=self.w_raw[k])


def correct_imu(s: ImuSample, b_a: np.ndarray, b_g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Remove estimated biases from a raw sample."""
    f_hat = np.asarray(s.f_raw, dtype=float) - np.asarray(b_a, dtype=float)
    w_hat = np.asarray(s.w_raw, dtype=float) - np.asarray(b_g, dtype=float)
    return f_hat, w_hat


def check_step(dt: float) -> None:
    if not np.isfinite(dt) or dt <= 0.0:
        raise PropagationError(dt, "time step must be positive")
    if dt > MAX_STEP:
        raise PropagationError(dt, f"time step exceeds {MAX_STEP} s")


def propagate_link(
    p: np.ndarray,
    v: np.ndarray,
    q: np.ndarray,
    f_hat: np.ndarray,
    w_hat: np.ndarray,
    dt: float,
    gravity_n: np.ndarray | tuple = DEFAULT_GRAVITY,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One first-order step; specific force is rotated with the pre-step attitude."""
    check_step(dt)
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    R = quat_to_dcm(q)
    a = np.einsum("...ij,...j->...i", R, np.asarray(f_hat, dtype=float)) + np.asarray(gravity_n, dtype=float)
    v_new = v + a * dt
    p_new = p + v * dt + 0.5 * a * dt * dt
    q_new = quat_mul(q, rotvec_to_quat(np.asarray(w_hat, dtype=float) * dt))
    return p_new, v_new, q_new


def propagate_states(
    layout: StateLayout,
    X: np.ndarray,
    f_raw: np.ndarray,
    w_raw: np.ndarray,
    dt: float,
    gravity_n: np.ndarray | tuple = DEFAULT_GRAVITY,
) -> np.ndarray:
    """Propagate raw state arrays (..., state_dim); each row corrects with its own biases."""
    X = np.asarray(X, dtype=float)
    f_raw = np.asarray(f_raw, dtype=float)
    w_raw = np.asarray(w_raw, dtype=float)
    if f_raw.shape != (layout.n_links, 3) or w_raw.shape != (layout.n_links, 3):
        raise DimensionMismatchError("IMU epoch", (layout.n_links, 3), f_raw.shape)
    idx = layout.state_index
    f_hat = f_raw - X[..., idx["ba"]]
    w_hat = w_raw - X[..., idx["bg"]]
    p, v, q = propagate_link(
        X[..., idx["p"]], X[..., idx["v"]], X[..., idx["att"]], f_hat, w_hat, dt, gravity_n,
    )
    out = X.copy()
    out[..., idx["p"]] = p
    out[..., idx["v"]] = v
    out[..., idx["att"]] = q
    return out


def propagate_state(
    x: NavState,
    epoch: ImuEpoch,
    dt: float,
    gravity_n: np.ndarray | tuple = DEFAULT_GRAVITY,
) -> NavState:
    """Propagate every link of the chain by dt using the epoch's samples."""
    return NavState(x.layout, propagate_states(x.layout, x.vec, epoch.f_raw, epoch.w_raw, dt, gravity_n))


@dataclass
class ImuLog:
    """Synchronized IMU stream of the whole chain: t (n,), f_raw/w_raw (n, N, 3)."""
    t: np.ndarray
    f_raw: np.ndarray
    w_raw: np.ndarray

    @property
    def n_epochs(self) -> int:
        return self.t.shape[0]

    @property
    def n_links(self) -> int:
        return self.f_raw.shape[1]

    @property
    def rate(self) -> float:
        return float(1.0 / np.median(np.diff(self.t))) if self.n_epochs > 1 else 0.0

    def epoch(self, k: int) -> ImuEpoch:
        return ImuEpoch(t=float(self.t[k]), f_raw=self.f_raw[k], w_raw=self.w_raw[k])

    def epochs(self):
        for k in range(self.n_epochs):
            yield self.epoch(k)

    def samples(self):
        """Per-link samples in (time, link) order."""
        for k in range(self.n_epochs):
            for link in range(self.n_links):
                yield ImuSample(t=float(self.t[k]), link_id=link, f_raw=self.f_raw[k, link], w_raw=self.w_raw[k, link])
