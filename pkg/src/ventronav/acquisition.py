"""Simulated landmark acquisition.

Stands in for the phone's camera + depth capture: a virtual camera is aimed
at a landmark on the head phantom, the depth is read off the mesh surface
along the aim ray (surface-only sensing, like LiDAR), noise models perturb
the aim pixel, the depth reading, and the camera pose, and the sample is
unprojected back to a world-space pick.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NotVisible, UnknownLandmark
from .geometry import (
    CameraIntrinsics,
    CameraPose,
    Rotation,
    TriangleMesh,
    look_at_pose,
    pixel_ray,
    point_mesh_distance,
    ray_mesh_intersect,
    unproject,
)
from .geometry.transform import RigidTransform, SimilarityTransform
from .landmarks import LANDMARK_ORDER, LandmarkId, LandmarkSet
from .registration import aggregate_repeated_picks

VISIBILITY_GATE_MM = 20.0
LANDMARK_SURFACE_TOL_MM = 0.5

DEFAULT_INTRINSICS = CameraIntrinsics(fx=1500.0, fy=1500.0, cx=960.0, cy=540.0,
                                      width=1920, height=1080)
DEFAULT_STANDOFF_MM = 300.0


@dataclass(frozen=True)
class NoiseModel:
    """Lumped sensor error model; all sigmas >= 0, zero model is exact."""

    aim_sigma_px: float = 0.0
    depth_sigma_mm: float = 0.0
    depth_bias_mm: float = 0.0
    pose_rot_sigma_deg: float = 0.0
    pose_trans_sigma_mm: float = 0.0
    stream: int = 0  # RNG sub-stream id, keeps independent noise sources apart

    def __post_init__(self):
        for name in ("aim_sigma_px", "depth_sigma_mm", "pose_rot_sigma_deg",
                     "pose_trans_sigma_mm"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")

    @staticmethod
    def zero() -> "NoiseModel":
        return NoiseModel()

    def scaled(self, factor: float) -> "NoiseModel":
        """All noise magnitudes (bias included) multiplied by factor."""
        return replace(
            self,
            aim_sigma_px=self.aim_sigma_px * factor,
            depth_sigma_mm=self.depth_sigma_mm * factor,
            depth_bias_mm=self.depth_bias_mm * factor,
            pose_rot_sigma_deg=self.pose_rot_sigma_deg * factor,
            pose_trans_sigma_mm=self.pose_trans_sigma_mm * factor,
        )

    def to_dict(self) -> dict:
        return {
            "aim_sigma_px": self.aim_sigma_px,
            "depth_sigma_mm": self.depth_sigma_mm,
            "depth_bias_mm": self.depth_bias_mm,
            "pose_rot_sigma_deg": self.pose_rot_sigma_deg,
            "pose_trans_sigma_mm": self.pose_trans_sigma_mm,
            "stream": self.stream,
        }

    @staticmethod
    def from_dict(d: dict) -> "NoiseModel":
        return NoiseModel(
            aim_sigma_px=float(d.get("aim_sigma_px", 0.0)),
            depth_sigma_mm=float(d.get("depth_sigma_mm", 0.0)),
            depth_bias_mm=float(d.get("depth_bias_mm", 0.0)),
            pose_rot_sigma_deg=float(d.get("pose_rot_sigma_deg", 0.0)),
            pose_trans_sigma_mm=float(d.get("pose_trans_sigma_mm", 0.0)),
            stream=int(d.get("stream", 0)),
        )


@dataclass(frozen=True)
class AcquisitionSample:
    landmark: LandmarkId
    pixel: np.ndarray
    depth: float
    pose: CameraPose  # pose actually used (after drift)
    point: np.ndarray  # world-space pick = unproject(pixel, depth) under pose


@dataclass
class VirtualScene:
    """The simulated patient: world-space head, model-space ventricles, and
    the ground-truth pose tying the two frames together."""

    head_mesh: TriangleMesh  # world space
    ventricle_mesh: TriangleMesh  # model space
    model_to_world_truth: SimilarityTransform
    model_landmarks: LandmarkSet
    true_world_landmarks: LandmarkSet = field(init=False)

    def __post_init__(self):
        if self.model_landmarks.space != "model":
            raise ValueError("model_landmarks must be tagged model-space")
        world = {lid: self.model_to_world_truth.apply(p)
                 for lid, p in self.model_landmarks.points.items()}
        self.true_world_landmarks = LandmarkSet(space="world", points=world)
        for lid, p in self.true_world_landmarks.points.items():
            d, _ = point_mesh_distance(p, self.head_mesh)
            if d > LANDMARK_SURFACE_TOL_MM:
                raise ValueError(
                    f"landmark {lid.value} lies {d:.3f} mm off the head surface "
                    f"(limit {LANDMARK_SURFACE_TOL_MM} mm)")

    @staticmethod
    def from_model(head_mesh_model: TriangleMesh, ventricle_mesh_model: TriangleMesh,
                   truth: SimilarityTransform, model_landmarks: LandmarkSet) -> "VirtualScene":
        """Build the world-space patient by posing the model-space head."""
        return VirtualScene(
            head_mesh=head_mesh_model.transformed(truth),
            ventricle_mesh=ventricle_mesh_model,
            model_to_world_truth=truth,
            model_landmarks=model_landmarks,
        )


def aim_camera(scene: VirtualScene, landmark_id: LandmarkId,
               standoff_mm: float = DEFAULT_STANDOFF_MM,
               approach_direction=None) -> CameraPose:
    """Place the virtual device standoff mm from the landmark, principal axis
    through it. Default approach is radial, out from the head centroid."""
    if not standoff_mm > 0:
        raise ValueError("standoff must be > 0")
    landmark_id = LandmarkId(landmark_id)
    if landmark_id not in scene.true_world_landmarks.points:
        raise UnknownLandmark(landmark_id.value)
    target = scene.true_world_landmarks.points[landmark_id]
    if approach_direction is None:
        approach_direction = target - scene.head_mesh.centroid
    approach = np.asarray(approach_direction, dtype=float)
    n = np.linalg.norm(approach)
    if n < 1e-9:
        raise ValueError("approach direction is degenerate")
    approach = approach / n
    return look_at_pose(eye=target + standoff_mm * approach, target=target)


def _drifted_pose(pose: CameraPose, noise: NoiseModel, rng: np.random.Generator) -> CameraPose:
    """Apply per-capture pose drift in the camera's own frame."""
    if noise.pose_rot_sigma_deg == 0.0 and noise.pose_trans_sigma_mm == 0.0:
        return pose
    rotvec = rng.normal(0.0, np.deg2rad(noise.pose_rot_sigma_deg), size=3)
    angle = float(np.linalg.norm(rotvec))
    rot = Rotation.identity() if angle < 1e-15 else Rotation.from_axis_angle(rotvec, angle)
    shift = rng.normal(0.0, noise.pose_trans_sigma_mm, size=3)
    return pose.compose(RigidTransform(rotation=rot, translation=shift))


def acquire_landmark(scene: VirtualScene, pose: CameraPose, intr: CameraIntrinsics,
                     landmark_id: LandmarkId, noise: NoiseModel,
                     rng: np.random.Generator) -> AcquisitionSample:
    """One capture: jitter the aim pixel, read depth off the surface along the
    jittered ray, drift the pose, and unproject to a world-space pick."""
    landmark_id = LandmarkId(landmark_id)
    if landmark_id not in scene.true_world_landmarks.points:
        raise UnknownLandmark(landmark_id.value)
    true_point = scene.true_world_landmarks.points[landmark_id]

    pixel = intr.principal_point + rng.normal(0.0, noise.aim_sigma_px, size=2)
    ray = pixel_ray(intr, pose, pixel)
    hit = ray_mesh_intersect(ray, scene.head_mesh)
    if hit is None or np.linalg.norm(hit.point - true_point) > VISIBILITY_GATE_MM:
        raise NotVisible(
            f"aim ray missed the head surface within {VISIBILITY_GATE_MM} mm "
            f"of {landmark_id.value}")

    depth = hit.t + rng.normal(0.0, noise.depth_sigma_mm) + noise.depth_bias_mm
    used_pose = _drifted_pose(pose, noise, rng)
    point = unproject(intr, used_pose, pixel, depth)
    return AcquisitionSample(landmark=landmark_id, pixel=pixel, depth=float(depth),
                             pose=used_pose, point=point)


def simulate_session(scene: VirtualScene, intr: CameraIntrinsics, noise: NoiseModel,
                     rng: np.random.Generator, picks_per_landmark: int = 1,
                     standoff_mm: float = DEFAULT_STANDOFF_MM,
                     ) -> tuple[LandmarkSet, dict[LandmarkId, float]]:
    """Acquire all seven landmarks in canonical order, averaging repeated picks.

    Returns the complete world-space landmark set (pick centroids) and the
    RMS spread of each landmark's picks.
    """
    if picks_per_landmark < 1:
        raise ValueError("picks_per_landmark must be >= 1")
    points: dict[LandmarkId, np.ndarray] = {}
    spreads: dict[LandmarkId, float] = {}
    for lid in LANDMARK_ORDER:
        pose = aim_camera(scene, lid, standoff_mm)
        picks = [acquire_landmark(scene, pose, intr, lid, noise, rng).point
                 for _ in range(picks_per_landmark)]
        centroid, spread = aggregate_repeated_picks(picks)
        points[lid] = centroid
        spreads[lid] = spread
    return LandmarkSet(space="world", points=points), spreads
