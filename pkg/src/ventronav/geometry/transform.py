"""Similarity and rigid transforms between model (CT/mesh) space and world (patient) space.

Units are millimetres throughout; frames are right-handed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rotation import Rotation, _as_vec3


@dataclass(frozen=True)
class SimilarityTransform:
    """p_out = scale * R @ p_in + translation."""

    scale: float = 1.0
    rotation: Rotation = field(default_factory=Rotation.identity)
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"scale must be finite and > 0, got {self.scale}")
        object.__setattr__(self, "translation", _as_vec3(self.translation))

    @staticmethod
    def identity() -> "SimilarityTransform":
        return SimilarityTransform()

    def apply(self, p) -> np.ndarray:
        """Apply to a single point (3,) or an array of points (..., 3)."""
        p = np.asarray(p, dtype=float)
        return self.scale * (p @ self.rotation.as_matrix().T) + self.translation

    def compose(self, other: "SimilarityTransform") -> "SimilarityTransform":
        """self after other: compose(a, b).apply(p) == a.apply(b.apply(p))."""
        return SimilarityTransform(
            scale=self.scale * other.scale,
            rotation=self.rotation.compose(other.rotation),
            translation=self.scale * self.rotation.apply(other.translation) + self.translation,
        )

    def inverse(self) -> "SimilarityTransform":
        inv_rot = self.rotation.inverse()
        return SimilarityTransform(
            scale=1.0 / self.scale,
            rotation=inv_rot,
            translation=-(1.0 / self.scale) * inv_rot.apply(self.translation),
        )

    def as_matrix(self) -> np.ndarray:
        """Homogeneous 4x4 matrix."""
        m = np.eye(4)
        m[:3, :3] = self.scale * self.rotation.as_matrix()
        m[:3, 3] = self.translation
        return m

    def to_dict(self) -> dict:
        # quat is the bit-stable storage form; the matrix is derived, for readers
        return {
            "scale": float(self.scale),
            "rotation": self.rotation.as_matrix().tolist(),
            "quat": self.rotation.quat.tolist(),
            "translation": self.translation.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "SimilarityTransform":
        if "quat" in d:
            rot = Rotation(np.asarray(d["quat"], dtype=float))
        else:
            rot = Rotation.from_matrix(np.asarray(d["rotation"], dtype=float))
        return SimilarityTransform(
            scale=float(d["scale"]),
            rotation=rot,
            translation=np.asarray(d["translation"], dtype=float),
        )


@dataclass(frozen=True)
class RigidTransform:
    """Rotation plus translation, scale fixed at 1. Used for camera and marker poses."""

    rotation: Rotation = field(default_factory=Rotation.identity)
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "translation", _as_vec3(self.translation))

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform()

    def apply(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return p @ self.rotation.as_matrix().T + self.translation

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        return RigidTransform(
            rotation=self.rotation.compose(other.rotation),
            translation=self.rotation.apply(other.translation) + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        inv_rot = self.rotation.inverse()
        return RigidTransform(rotation=inv_rot, translation=-inv_rot.apply(self.translation))

    def as_similarity(self) -> SimilarityTransform:
        return SimilarityTransform(1.0, self.rotation, self.translation)

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.as_matrix().tolist(),
            "quat": self.rotation.quat.tolist(),
            "translation": self.translation.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "RigidTransform":
        if "quat" in d:
            rot = Rotation(np.asarray(d["quat"], dtype=float))
        else:
            rot = Rotation.from_matrix(np.asarray(d["rotation"], dtype=float))
        return RigidTransform(
            rotation=rot,
            translation=np.asarray(d["translation"], dtype=float),
        )


# Camera pose maps camera frame -> world frame; marker pose maps marker frame -> world frame.
CameraPose = RigidTransform
MarkerPose = RigidTransform
