"""
State layout: maps every named sub-state of the chain onto the flat
state vector (quaternion attitudes) and error vector (rotation vectors).

Per link k in id order: p, v, attitude, b_a, b_g, then the segments link k
owns in joint-declaration order. The camera lever arm l_c comes last.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from core.body.model import ChainModel

_LINK_BLOCKS = ("p", "v", "att", "ba", "bg")


@dataclass(frozen=True)
class LinkSlices:
    p: slice
    v: slice
    att: slice
    ba: slice
    bg: slice


@dataclass(frozen=True, eq=False)
class StateLayout:
    """Slice tables plus the gather indices the batched math runs on."""
    n_links: int
    camera_link: int
    state_dim: int
    error_dim: int
    state_links: tuple[LinkSlices, ...]
    error_links: tuple[LinkSlices, ...]
    state_segments: dict[tuple[int, int], slice]
    error_segments: dict[tuple[int, int], slice]
    state_camera: slice
    error_camera: slice
    # gather indices, shape (N, 3) or (N, 4) for attitude state
    state_index: dict[str, np.ndarray]
    error_index: dict[str, np.ndarray]
    # every non-attitude entry, state and error positions aligned
    lin_state_idx: np.ndarray
    lin_error_idx: np.ndarray

    @property
    def quat_state_idx(self) -> np.ndarray:
        return self.state_index["att"]

    @property
    def rotvec_error_idx(self) -> np.ndarray:
        return self.error_index["att"]

    @property
    def segments(self) -> list[tuple[int, int]]:
        return list(self.state_segments)

    def slice_table(self) -> list[tuple[str, slice, slice]]:
        """(symbol, state slice, error slice) in vector order."""
        rows = []
        for k in range(self.n_links):
            s, e = self.state_links[k], self.error_links[k]
            names = {"p": "p", "v": "v", "att": "q", "ba": "b_a", "bg": "b_g"}
            for block in _LINK_BLOCKS:
                rows.append((f"{names[block]}[{k}]", getattr(s, block), getattr(e, block)))
            for seg in self.state_segments:
                if seg[0] == k:
                    rows.append((f"l[{seg[0]},{seg[1]}]", self.state_segments[seg], self.error_segments[seg]))
        rows.append(("l_c", self.state_camera, self.error_camera))
        return rows

    def census(self) -> tuple[int, int]:
        """(motion variables, constants) in error coordinates: p, v, φ versus the rest."""
        variables = 9 * self.n_links
        return variables, self.error_dim - variables


def build_layout(model: ChainModel) -> StateLayout:
    """Deterministic layout for a validated chain."""
    s_pos = 0
    e_pos = 0
    state_links, error_links = [], []
    state_segments: dict[tuple[int, int], slice] = {}
    error_segments: dict[tuple[int, int], slice] = {}

    def take(width_s: int, width_e: int) -> tuple[slice, slice]:
        nonlocal s_pos, e_pos
        out = slice(s_pos, s_pos + width_s), slice(e_pos, e_pos + width_e)
        s_pos += width_s
        e_pos += width_e
        return out

    for k in range(model.n_links):
        blocks_s, blocks_e = {}, {}
        for block in _LINK_BLOCKS:
            blocks_s[block], blocks_e[block] = take(4 if block == "att" else 3, 3)
        state_links.append(LinkSlices(**blocks_s))
        error_links.append(LinkSlices(**blocks_e))
        for seg in model.segments_of(k):
            state_segments[seg], error_segments[seg] = take(3, 3)
    state_camera, error_camera = take(3, 3)

    state_index = {
        block: np.array([np.arange(s.start, s.stop) for s in (getattr(ls, block) for ls in state_links)])
        for block in _LINK_BLOCKS
    }
    error_index = {
        block: np.array([np.arange(s.start, s.stop) for s in (getattr(ls, block) for ls in error_links)])
        for block in _LINK_BLOCKS
    }

    att_state = set(state_index["att"].ravel().tolist())
    att_error = set(error_index["att"].ravel().tolist())
    lin_state = np.array([i for i in range(s_pos) if i not in att_state])
    lin_error = np.array([i for i in range(e_pos) if i not in att_error])

    return StateLayout(
        n_links=model.n_links,
        camera_link=model.camera_link,
        state_dim=s_pos,
        error_dim=e_pos,
        state_links=tuple(state_links),
        error_links=tuple(error_links),
        state_segments=state_segments,
        error_segments=error_segments,
        state_camera=state_camera,
        error_camera=error_camera,
        state_index=state_index,
        error_index=error_index,
        lin_state_idx=lin_state,
        lin_error_idx=lin_error,
    )
