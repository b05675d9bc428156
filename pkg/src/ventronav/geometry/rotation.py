"""Proper 3D rotations, stored as unit quaternions to avoid drift under composition."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHONORMALITY_TOL = 1e-9


def _as_vec3(p) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector components must be finite")
    return a


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion (w, x, y, z). Exposed as a 3x3 proper-orthonormal matrix."""

    quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))

    def __post_init__(self):
        q = np.asarray(self.quat, dtype=float)
        if q.shape != (4,) or not np.all(np.isfinite(q)):
            raise ValueError("quaternion must be a finite 4-vector")
        n = float(np.linalg.norm(q))
        if n == 0.0:
            raise ValueError("zero quaternion")
        if abs(n - 1.0) > 1e-12:  # keep construction bit-idempotent on unit input
            q = q / n
        if q[0] < 0.0:  # canonical sign, so equal rotations compare equal
            q = -q
        object.__setattr__(self, "quat", q)

    # constructors

    @staticmethod
    def identity() -> "Rotation":
        return Rotation()

    @staticmethod
    def from_matrix(m) -> "Rotation":
        """Build from a 3x3 matrix; must be proper-orthonormal within 1e-9."""
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("rotation matrix must be 3x3")
        if not np.allclose(m.T @ m, np.eye(3), atol=1e-7):
            raise ValueError("matrix is not orthonormal")
        if np.linalg.det(m) < 0.0:
            raise ValueError("matrix is a reflection, not a proper rotation")
        # Shepperd's method: pick the largest diagonal combination for stability
        t = np.trace(m)
        if t > 0.0:
            s = np.sqrt(t + 1.0) * 2.0
            q = np.array([0.25 * s,
                          (m[2, 1] - m[1, 2]) / s,
                          (m[0, 2] - m[2, 0]) / s,
                          (m[1, 0] - m[0, 1]) / s])
        elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
            s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
            q = np.array([(m[2, 1] - m[1, 2]) / s,
                          0.25 * s,
                          (m[0, 1] + m[1, 0]) / s,
                          (m[0, 2] + m[2, 0]) / s])
        elif m[1, 1] >= m[2, 2]:
            s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
            q = np.array([(m[0, 2] - m[2, 0]) / s,
                          (m[0, 1] + m[1, 0]) / s,
                          0.25 * s,
                          (m[1, 2] + m[2, 1]) / s])
        else:
            s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
            q = np.array([(m[1, 0] - m[0, 1]) / s,
                          (m[0, 2] + m[2, 0]) / s,
                          (m[1, 2] + m[2, 1]) / s,
                          0.25 * s])
        return Rotation(q)

    @staticmethod
    def from_axis_angle(axis, angle_rad: float) -> "Rotation":
        axis = _as_vec3(axis)
        n = float(np.linalg.norm(axis))
        if n == 0.0:
            raise ValueError("zero rotation axis")
        half = 0.5 * float(angle_rad)
        return Rotation(np.concatenate(([np.cos(half)], np.sin(half) * axis / n)))

    @staticmethod
    def random(rng: np.random.Generator) -> "Rotation":
        """Uniform random rotation (normalized 4D Gaussian quaternion)."""
        q = rng.standard_normal(4)
        while np.linalg.norm(q) < 1e-12:
            q = rng.standard_normal(4)
        return Rotation(q)

    # conversions and algebra

    def as_matrix(self) -> np.ndarray:
        w, x, y, z = self.quat
        return np.array([
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ])

    def apply(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return p @ self.as_matrix().T

    def compose(self, other: "Rotation") -> "Rotation":
        """self after other: (self.compose(other)).apply(p) == self.apply(other.apply(p))."""
        w1, x1, y1, z1 = self.quat
        w2, x2, y2, z2 = other.quat
        return Rotation(np.array([
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]))

    def inverse(self) -> "Rotation":
        w, x, y, z = self.quat
        return Rotation(np.array([w, -x, -y, -z]))

    def angle_to(self, other: "Rotation") -> float:
        """Geodesic angle in radians between two rotations.

        Uses the chord form 4*asin(||q1 -+ q2|| / 2), which stays accurate for
        tiny angles where acos(dot) loses all precision.
        """
        q1, q2 = self.quat, other.quat
        if float(np.dot(q1, q2)) < 0.0:
            q2 = -q2
        chord = float(np.linalg.norm(q1 - q2))
        return 4.0 * np.arcsin(min(1.0, 0.5 * chord))

    def is_proper(self, tol: float = ORTHONORMALITY_TOL) -> bool:
        m = self.as_matrix()
        return (np.abs(m.T @ m - np.eye(3)).max() < tol
                and abs(np.linalg.det(m) - 1.0) < tol)
