"""
Measurement channels.

A channel bundles what both filters need for one 3-vector observation:
the measured value, the nonlinear prediction (batched over sigma points),
the exact Jacobian on the error chart, and the noise SD. The residual is
always measured − predicted.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod

import numpy as np

from core.body.layout import StateLayout
from core.body.model import ChainModel
from core.body.state import NavState
from core.config import NoiseConfig
from core.exceptions import UnknownChannelError
from core.ins.propagation import ImuEpoch
from core.measurements.predictors import (
    camera_pos_batch,
    gravity_batch,
    joint_pos_batch,
    joint_vel_batch,
)
from core.measurements.types import JointKind, JointObservation, PositionFix
from core.rotation import skew

logger = logging.getLogger(__name__)

_I3 = np.eye(3)


class BaseChannel(ABC):
    """One stacked block of an update."""

    dim: int = 3
    kind: str = "channel"

    def __init__(self, sigma: float):
        self.sigma = float(sigma)

    @property
    @abstractmethod
    def name(self) -> str:
        """Unique label within an epoch, used in logs and events."""
        ...

    @abstractmethod
    def measured(self) -> np.ndarray:
        ...

    @abstractmethod
    def predict(self, layout: StateLayout, X: np.ndarray) -> np.ndarray:
        """Predicted value for state arrays (..., state_dim) → (..., dim)."""
        ...

    @abstractmethod
    def jacobian(self, x: NavState) -> np.ndarray:
        """∂predicted/∂error at x, shape (dim, error_dim)."""
        ...

    def residual(self, x: NavState) -> np.ndarray:
        return self.measured() - self.predict(x.layout, x.vec)

    def noise_var(self) -> np.ndarray:
        return np.full(self.dim, self.sigma ** 2)

    def __repr__(self) -> str:
        return f"Channel({self.name}, sigma={self.sigma:g})"


class JointPositionChannel(BaseChannel):
    """Both sides of joint (i, j) must put it at the same n-frame point."""

    kind = "joint_pos"

    def __init__(self, joint: tuple[int, int], sigma: float):
        super().__init__(sigma)
        self.joint = (int(joint[0]), int(joint[1]))

    @property
    def name(self) -> str:
        return f"joint_pos[{self.joint[0]}-{self.joint[1]}]"

    def measured(self) -> np.ndarray:
        return np.zeros(3)

    def predict(self, layout, X):
        return joint_pos_batch(layout, X, self.joint)

    def jacobian(self, x):
        i, j = self.joint
        lay = x.layout
        el = lay.error_links
        R_i, R_j = x.dcm(i), x.dcm(j)
        H = np.zeros((3, lay.error_dim))
        H[:, el[j].p] = _I3
        H[:, el[i].p] = -_I3
        H[:, el[j].att] = -skew(R_j @ x.segment(j, i))
        H[:, el[i].att] = skew(R_i @ x.segment(i, j))
        H[:, lay.error_segments[(j, i)]] = R_j
        H[:, lay.error_segments[(i, j)]] = -R_i
        return H


class JointVelocityChannel(BaseChannel):
    """Both sides of joint (i, j) must move it with the same n-frame velocity."""

    kind = "joint_vel"

    def __init__(self, joint: tuple[int, int], w_raw_i: np.ndarray, w_raw_j: np.ndarray, sigma: float):
        super().__init__(sigma)
        self.joint = (int(joint[0]), int(joint[1]))
        self.w_raw_i = np.asarray(w_raw_i, dtype=float)
        self.w_raw_j = np.asarray(w_raw_j, dtype=float)

    @property
    def name(self) -> str:
        return f"joint_vel[{self.joint[0]}-{self.joint[1]}]"

    def measured(self) -> np.ndarray:
        return np.zeros(3)

    def predict(self, layout, X):
        return joint_vel_batch(layout, X, self.joint, self.w_raw_i, self.w_raw_j)

    def jacobian(self, x):
        i, j = self.joint
        lay = x.layout
        el = lay.error_links
        R_i, R_j = x.dcm(i), x.dcm(j)
        w_i = self.w_raw_i - x.b_g(i)
        w_j = self.w_raw_j - x.b_g(j)
        l_ij, l_ji = x.segment(i, j), x.segment(j, i)
        H = np.zeros((3, lay.error_dim))
        H[:, el[j].v] = _I3
        H[:, el[i].v] = -_I3
        H[:, el[j].att] = -skew(R_j @ np.cross(w_j, l_ji))
        H[:, el[i].att] = skew(R_i @ np.cross(w_i, l_ij))
        H[:, lay.error_segments[(j, i)]] = R_j @ skew(w_j)
        H[:, lay.error_segments[(i, j)]] = -R_i @ skew(w_i)
        H[:, el[j].bg] = R_j @ skew(l_ji)
        H[:, el[i].bg] = -R_i @ skew(l_ij)
        return H


class CameraPositionChannel(BaseChannel):
    """Absolute camera position fix: p_0 + R_0 l_c."""

    kind = "camera"

    def __init__(self, fix: PositionFix):
        super().__init__(fix.sigma)
        self.fix = fix

    @property
    def name(self) -> str:
        return "camera"

    def measured(self) -> np.ndarray:
        return np.asarray(self.fix.p_c_meas, dtype=float)

    def predict(self, layout, X):
        return camera_pos_batch(layout, X)

    def jacobian(self, x):
        lay = x.layout
        c = lay.camera_link
        R = x.dcm(c)
        H = np.zeros((3, lay.error_dim))
        H[:, lay.error_links[c].p] = _I3
        H[:, lay.error_links[c].att] = -skew(R @ x.l_c)
        H[:, lay.error_camera] = R
        return H


class GravityChannel(BaseChannel):
    """While link k is stationary its bias-corrected specific force is −Rᵀ g."""

    kind = "gravity"

    def __init__(self, link_id: int, f_raw: np.ndarray, gravity_n: np.ndarray, sigma: float):
        super().__init__(sigma)
        self.link_id = int(link_id)
        self.f_raw = np.asarray(f_raw, dtype=float)
        self.gravity_n = np.asarray(gravity_n, dtype=float)

    @property
    def name(self) -> str:
        return f"gravity[{self.link_id}]"

    def measured(self) -> np.ndarray:
        return self.gravity_n

    def predict(self, layout, X):
        return gravity_batch(layout, X, self.link_id, self.f_raw)

    def jacobian(self, x):
        k = self.link_id
        lay = x.layout
        R = x.dcm(k)
        H = np.zeros((3, lay.error_dim))
        H[:, lay.error_links[k].att] = skew(R @ (self.f_raw - x.b_a(k)))
        H[:, lay.error_links[k].ba] = R
        return H


def assemble_H(channel: BaseChannel, x: NavState) -> np.ndarray:
    """Jacobian rows of one channel on x's error layout."""
    if not isinstance(channel, BaseChannel):
        raise UnknownChannelError(channel)
    return channel.jacobian(x)


# Stacking helpers

def stack_jacobian(channels: list[BaseChannel], x: NavState) -> np.ndarray:
    return np.vstack([assemble_H(c, x) for c in channels])


def stack_measured(channels: list[BaseChannel]) -> np.ndarray:
    return np.concatenate([c.measured() for c in channels])


def stack_predict(channels: list[BaseChannel], layout: StateLayout, X: np.ndarray) -> np.ndarray:
    return np.concatenate([c.predict(layout, X) for c in channels], axis=-1)


def stack_noise_var(channels: list[BaseChannel]) -> np.ndarray:
    return np.concatenate([c.noise_var() for c in channels])


def channel_slices(channels: list[BaseChannel]) -> list[slice]:
    out, pos = [], 0
    for c in channels:
        out.append(slice(pos, pos + c.dim))
        pos += c.dim
    return out


def build_channels(
    model: ChainModel,
    epoch: ImuEpoch,
    noise: NoiseConfig,
    imu_rate: float,
    stationary_links: tuple[int, ...] | list[int] = (),
    fixes: tuple[PositionFix, ...] | list[PositionFix] = (),
    use_joints: bool = True,
    joint_velocity: bool = True,
) -> list[BaseChannel]:
    """
    Channels firing at one epoch, in the fixed stacking order:
    joint positions, joint velocities, gravity, position fixes.
    """
    channels: list[BaseChannel] = []
    if use_joints:
        for obs in joint_observations(model, noise, joint_velocity):
            i, j = obs.joint
            if obs.kind == JointKind.POSITION:
                channels.append(JointPositionChannel(obs.joint, obs.sigma))
            else:
                channels.append(JointVelocityChannel(obs.joint, epoch.w_raw[i], epoch.w_raw[j], obs.sigma))
    sigma_g = noise.gravity_sd(imu_rate)
    for k in sorted(stationary_links):
        channels.append(GravityChannel(k, epoch.f_raw[k], model.gravity, sigma_g))
    for fix in fixes:
        channels.append(CameraPositionChannel(fix))
    return channels


def joint_observations(model: ChainModel, noise: NoiseConfig, velocity: bool = True) -> list[JointObservation]:
    """Joint pseudo-measurements of the chain: all positions first, then all velocities."""
    obs = [JointObservation(joint, JointKind.POSITION, noise.sigma_joint_pos) for joint in model.joints]
    if velocity:
        obs += [JointObservation(joint, JointKind.VELOCITY, noise.sigma_joint_vel) for joint in model.joints]
    return obs
