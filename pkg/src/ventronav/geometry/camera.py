"""Ideal pinhole camera: projection, unprojection, and pixel rays.

Camera frame convention: x right, y down, z forward (along the principal axis).
Depth is the z coordinate in the camera frame, in millimetres.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BehindCamera, NonPositiveDepth
from .mesh import Ray
from .rotation import Rotation
from .transform import CameraPose


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int = 0
    height: int = 0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width and not (0 <= self.cx < self.width):
            raise ValueError("principal point cx outside sensor")
        if self.height and not (0 <= self.cy < self.height):
            raise ValueError("principal point cy outside sensor")

    @property
    def principal_point(self) -> np.ndarray:
        return np.array([self.cx, self.cy])

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @staticmethod
    def from_dict(d: dict) -> "CameraIntrinsics":
        return CameraIntrinsics(fx=float(d["fx"]), fy=float(d["fy"]),
                                cx=float(d["cx"]), cy=float(d["cy"]),
                                width=int(d.get("width", 0)), height=int(d.get("height", 0)))


def project(intr: CameraIntrinsics, pose: CameraPose, p) -> tuple[np.ndarray, float]:
    """World point -> (pixel (u, v), depth). Raises BehindCamera when depth <= 0."""
    p_cam = pose.inverse().apply(np.asarray(p, dtype=float))
    z = float(p_cam[2])
    if z <= 0.0:
        raise BehindCamera(f"point depth {z:.6g} mm is not positive")
    u = intr.fx * p_cam[0] / z + intr.cx
    v = intr.fy * p_cam[1] / z + intr.cy
    return np.array([u, v]), z


def unproject(intr: CameraIntrinsics, pose: CameraPose, pixel, depth: float) -> np.ndarray:
    """(pixel, depth) -> world point; inverse of project for depth > 0."""
    if not depth > 0.0:
        raise NonPositiveDepth(f"depth {depth:.6g} mm is not positive")
    u, v = float(pixel[0]), float(pixel[1])
    p_cam = np.array([(u - intr.cx) / intr.fx * depth,
                      (v - intr.cy) / intr.fy * depth,
                      depth])
    return pose.apply(p_cam)


def pixel_ray(intr: CameraIntrinsics, pose: CameraPose, pixel) -> Ray:
    """World-space ray from the camera centre through a pixel."""
    u, v = float(pixel[0]), float(pixel[1])
    d_cam = np.array([(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0])
    d_world = pose.rotation.apply(d_cam)
    return Ray(origin=pose.translation, direction=d_world / np.linalg.norm(d_world))


def _cross3(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def look_at_pose(eye, target, up_hint=(0.0, 0.0, 1.0)) -> CameraPose:
    """Camera at `eye` with the principal (+z) axis through `target`.

    `up_hint` resolves the roll ambiguity; any vector not parallel to the view
    direction works.
    """
    eye = np.asarray(eye, dtype=float)
    target = np.asarray(target, dtype=float)
    fwd = target - eye
    n = np.linalg.norm(fwd)
    if n < 1e-12:
        raise ValueError("eye and target coincide")
    fwd = fwd / n
    up = np.asarray(up_hint, dtype=float)
    if np.linalg.norm(_cross3(up, fwd)) < 1e-6:
        up = np.array([0.0, 1.0, 0.0])
        if np.linalg.norm(_cross3(up, fwd)) < 1e-6:
            up = np.array([1.0, 0.0, 0.0])
    right = _cross3(-up, fwd)  # camera y points "down"
    right = right / np.linalg.norm(right)
    down = _cross3(fwd, right)
    m = np.column_stack([right, down, fwd])  # columns = camera axes in world frame
    return CameraPose(rotation=Rotation.from_matrix(m), translation=eye)
