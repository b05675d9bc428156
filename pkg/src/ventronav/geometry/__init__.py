"""Shared 3D types and camera/mesh geometry primitives."""

from .camera import CameraIntrinsics, look_at_pose, pixel_ray, project, unproject
from .mesh import (
    Ray,
    RayHit,
    TriangleMesh,
    point_inside_mesh,
    point_mesh_distance,
    point_mesh_distance_brute,
    ray_mesh_intersect,
    ray_mesh_intersect_brute,
)
from .rotation import Rotation
from .transform import CameraPose, MarkerPose, RigidTransform, SimilarityTransform

__all__ = [
    "CameraIntrinsics",
    "CameraPose",
    "MarkerPose",
    "Ray",
    "RayHit",
    "RigidTransform",
    "Rotation",
    "SimilarityTransform",
    "TriangleMesh",
    "look_at_pose",
    "pixel_ray",
    "point_inside_mesh",
    "point_mesh_distance",
    "point_mesh_distance_brute",
    "project",
    "ray_mesh_intersect",
    "ray_mesh_intersect_brute",
    "unproject",
]
