"""The seven named anatomical fiducials and landmark collections."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class LandmarkId(str, Enum):
    """Closed set of fiducials; declaration order is the acquisition sequence."""

    RIGHT_TRAGUS = "right_tragus"
    RIGHT_OUTER_CANTHUS = "right_outer_canthus"
    RIGHT_INNER_CANTHUS = "right_inner_canthus"
    NOSE_BRIDGE = "nose_bridge"
    LEFT_INNER_CANTHUS = "left_inner_canthus"
    LEFT_OUTER_CANTHUS = "left_outer_canthus"
    LEFT_TRAGUS = "left_tragus"

    @property
    def display_name(self) -> str:
        return self.value.replace("_", " ").title()


LANDMARK_ORDER: tuple[LandmarkId, ...] = tuple(LandmarkId)


@dataclass
class LandmarkSet:
    """Partial map from landmark id to a 3D point, tagged with its space."""

    space: str  # "model" | "world"
    points: dict[LandmarkId, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.space not in ("model", "world"):
            raise ValueError(f"space must be 'model' or 'world', got {self.space!r}")
        clean: dict[LandmarkId, np.ndarray] = {}
        for lid, p in self.points.items():
            lid = LandmarkId(lid)
            p = np.asarray(p, dtype=float)
            if p.shape != (3,) or not np.all(np.isfinite(p)):
                raise ValueError(f"landmark {lid.value} must be a finite 3-vector")
            clean[lid] = p
        self.points = clean

    @property
    def complete(self) -> bool:
        return len(self.points) == len(LANDMARK_ORDER)

    def ids(self) -> tuple[LandmarkId, ...]:
        return tuple(lid for lid in LANDMARK_ORDER if lid in self.points)

    def as_array(self, ids: tuple[LandmarkId, ...] | None = None) -> np.ndarray:
        """(N, 3) array in canonical order (or the given id order)."""
        if ids is None:
            ids = self.ids()
        return np.array([self.points[lid] for lid in ids])

    def with_point(self, lid: LandmarkId, p) -> "LandmarkSet":
        pts = dict(self.points)
        pts[lid] = np.asarray(p, dtype=float)
        return LandmarkSet(space=self.space, points=pts)

    def to_dict(self) -> dict:
        return {lid.value: self.points[lid].tolist() for lid in self.ids()}

    @staticmethod
    def from_dict(d: dict, space: str) -> "LandmarkSet":
        return LandmarkSet(space=space,
                           points={LandmarkId(k): np.asarray(v, dtype=float)
                                   for k, v in d.items()})
