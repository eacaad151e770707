"""Strapdown inertial propagation."""

from core.ins.propagation import (
    MAX_STEP,
    ImuEpoch,
    ImuLog,
    ImuSample,
    correct_imu,
    propagate_link,
    propagate_state,
    propagate_states,
)

__all__ = [
    "MAX_STEP", "ImuEpoch", "ImuLog", "ImuSample", "correct_imu",
    "propagate_link", "propagate_state", "propagate_states",
]
