"""
Chain model: links, ball-and-socket joints and the camera mounting.

Links are numbered 0..N-1. A joint (i, j) owns two segment vectors:
l_ij, from link i's IMU origin to the joint in link i's frame, and l_ji,
the same joint seen from link j.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from core.config import ChainConfig, load_settings
from core.exceptions import ChainModelError, UnknownJointError

logger = logging.getLogger(__name__)

DEFAULT_GRAVITY = (0.0, 0.0, 9.81)


@dataclass(frozen=True)
class LinkSpec:
    id: int
    label: str


@dataclass(frozen=True)
class ChainModel:
    """Validated link/joint topology. Immutable and safe to share across threads."""
    links: tuple[LinkSpec, ...]
    joints: tuple[tuple[int, int], ...]
    camera_link: int = 0
    gravity_n: tuple[float, float, float] = DEFAULT_GRAVITY
    _parents: dict[int, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "joints", tuple((int(i), int(j)) for i, j in self.joints))
        object.__setattr__(self, "gravity_n", tuple(float(g) for g in self.gravity_n))
        self._validate()
        object.__setattr__(self, "_parents", self._spanning_parents())

    # Validation

    def _validate(self) -> None:
        n = len(self.links)
        if n == 0:
            raise ChainModelError("chain has no links")
        ids = [link.id for link in self.links]
        if ids != list(range(n)):
            raise ChainModelError(f"link ids must be 0..{n - 1} in order, got {ids}")
        if not 0 <= self.camera_link < n:
            raise ChainModelError(f"camera link {self.camera_link} does not exist")
        if len(self.gravity_n) != 3:
            raise ChainModelError("gravity must be a 3-vector")

        seen: set[frozenset[int]] = set()
        for i, j in self.joints:
            if i == j:
                raise ChainModelError(f"joint ({i}, {j}) connects a link to itself")
            if not (0 <= i < n and 0 <= j < n):
                raise ChainModelError(f"joint ({i}, {j}) references a missing link")
            key = frozenset((i, j))
            if key in seen:
                raise ChainModelError(f"duplicate joint ({i}, {j})")
            seen.add(key)

        if len(self.joints) != n - 1:
            raise ChainModelError(
                f"{n} links need exactly {n - 1} joints for a tree, got {len(self.joints)}"
            )
        reached = self._reachable(self.camera_link)
        if len(reached) != n:
            missing = sorted(set(range(n)) - reached)
            raise ChainModelError(f"links {missing} are not connected to the chain")

    def _reachable(self, root: int) -> set[int]:
        reached = {root}
        queue = deque([root])
        while queue:
            k = queue.popleft()
            for other in self.neighbours(k):
                if other not in reached:
                    reached.add(other)
                    queue.append(other)
        return reached

    def _spanning_parents(self) -> dict[int, int]:
        parents: dict[int, int] = {}
        queue = deque([self.camera_link])
        visited = {self.camera_link}
        while queue:
            k = queue.popleft()
            for other in self.neighbours(k):
                if other not in visited:
                    visited.add(other)
                    parents[other] = k
                    queue.append(other)
        return parents

    # Queries

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def gravity(self) -> np.ndarray:
        return np.array(self.gravity_n)

    @property
    def labels(self) -> list[str]:
        return [link.label for link in self.links]

    def neighbours(self, k: int) -> list[int]:
        out = []
        for i, j in self.joints:
            if i == k:
                out.append(j)
            elif j == k:
                out.append(i)
        return out

    def joint_index(self, joint: tuple[int, int]) -> int:
        """Position of a joint in declaration order; accepts either orientation."""
        i, j = joint
        for idx, (a, b) in enumerate(self.joints):
            if (a, b) == (i, j) or (a, b) == (j, i):
                return idx
        raise UnknownJointError((i, j))

    def segments_of(self, k: int) -> list[tuple[int, int]]:
        """Segment keys (owner, other) carried by link k, in joint-declaration order."""
        out = []
        for i, j in self.joints:
            if i == k:
                out.append((i, j))
            elif j == k:
                out.append((j, i))
        return out

    def parent(self, k: int) -> int | None:
        """Parent of k in the tree rooted at the camera link."""
        return self._parents.get(k)

    def depth(self, k: int) -> int:
        d = 0
        while (p := self.parent(k)) is not None:
            k = p
            d += 1
        return d

    def traversal_order(self) -> list[int]:
        """Links ordered so every parent comes before its children."""
        return sorted(range(self.n_links), key=lambda k: (self.depth(k), k))

    # Construction helpers

    @classmethod
    def from_config(cls, cfg: ChainConfig) -> "ChainModel":
        links = tuple(LinkSpec(id=k, label=label) for k, label in enumerate(cfg.links))
        return cls(links=links, joints=tuple(cfg.joints), camera_link=cfg.camera_link,
                   gravity_n=tuple(cfg.gravity))

    @classmethod
    def from_file(cls, path: str | Path) -> "ChainModel":
        """Load from a JSON chain file or a key-value file holding CHAIN_* entries."""
        path = Path(path)
        if path.suffix.lower() == ".json":
            return cls.from_json(path.read_text(encoding="utf-8"))
        return cls.from_config(load_settings(path).chain)

    def to_dict(self) -> dict:
        return {
            "links": self.labels,
            "joints": [list(j) for j in self.joints],
            "camera_link": self.camera_link,
            "gravity": list(self.gravity_n),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ChainModel":
        data = json.loads(text)
        return cls.from_config(ChainConfig(
            links=data["links"], joints=[tuple(j) for j in data["joints"]],
            camera_link=data["camera_link"], gravity=tuple(data["gravity"]),
        ))


def arm_chain(gravity: float = 9.81) -> ChainModel:
    """Scapula (0, carries the camera) – upper arm (1) – forearm (2)."""
    return ChainModel(
        links=(LinkSpec(0, "scapula"), LinkSpec(1, "upper_arm"), LinkSpec(2, "forearm")),
        joints=((0, 1), (1, 2)),
        camera_link=0,
        gravity_n=(0.0, 0.0, gravity),
    )


def single_link(gravity: float = 9.81) -> ChainModel:
    """One link with the camera on it; no joints."""
    return ChainModel(links=(LinkSpec(0, "body"),), joints=(), camera_link=0,
                      gravity_n=(0.0, 0.0, gravity))
