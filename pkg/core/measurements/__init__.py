"""Measurement channels: joint constraints, camera position fixes and gravity referencing."""

from core.measurements.channels import (
    BaseChannel,
    CameraPositionChannel,
    GravityChannel,
    JointPositionChannel,
    JointVelocityChannel,
    assemble_H,
    build_channels,
)
from core.measurements.predictors import (
    camera_pos_predicted,
    gravity_predicted,
    joint_pos_predicted,
    joint_vel_predicted,
)
from core.measurements.stationary import StationaryDetector, detect_stationary
from core.measurements.types import JointKind, JointObservation, PositionFix, StationaryFlag

__all__ = [
    "BaseChannel", "JointPositionChannel", "JointVelocityChannel", "CameraPositionChannel",
    "GravityChannel", "assemble_H", "build_channels",
    "joint_pos_predicted", "joint_vel_predicted", "camera_pos_predicted", "gravity_predicted",
    "StationaryDetector", "detect_stationary",
    "JointKind", "JointObservation", "PositionFix", "StationaryFlag",
]
