"""Body model: chain topology, state layout and the navigation state."""

from core.body.layout import StateLayout, build_layout
from core.body.model import ChainModel, LinkSpec, arm_chain, single_link
from core.body.state import NavState, inject_batch, inject_error, retract_batch, retract_error

__all__ = [
    "ChainModel", "LinkSpec", "arm_chain", "single_link",
    "StateLayout", "build_layout",
    "NavState", "inject_error", "retract_error", "inject_batch", "retract_batch",
]
