"""Entry-point placement, target registration error, and catheter-tip feedback."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoSurfaceHit, NotRegistered
from .geometry import (
    MarkerPose,
    Ray,
    TriangleMesh,
    point_inside_mesh,
    point_mesh_distance,
    ray_mesh_intersect,
)
from .registration import RegistrationResult

TRE_ACCEPTABLE_MM = 5.0  # expert criterion for a usable registration


@dataclass(frozen=True)
class EntryPoint:
    """Burr-hole target on the head surface; at most one exists at a time."""

    position: np.ndarray  # world, on the head mesh
    planned_model: np.ndarray | None = None  # CT-space counterpart, if planned

    def to_dict(self) -> dict:
        return {
            "position": self.position.tolist(),
            "planned_model": None if self.planned_model is None else self.planned_model.tolist(),
        }


@dataclass(frozen=True)
class CatheterModel:
    """Rigid catheter: the tip sits at a fixed offset in the tracked marker's frame."""

    marker_to_tip_offset: np.ndarray

    def __post_init__(self):
        offset = np.asarray(self.marker_to_tip_offset, dtype=float)
        if offset.shape != (3,) or not np.all(np.isfinite(offset)):
            raise ValueError("marker_to_tip_offset must be a finite 3-vector")
        if np.linalg.norm(offset) <= 0.0:
            raise ValueError("catheter length must be > 0")
        object.__setattr__(self, "marker_to_tip_offset", offset)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.marker_to_tip_offset))


@dataclass(frozen=True)
class TrajectoryPlan:
    """Planned insertion line from the placed entry to the transformed target."""

    entry: EntryPoint
    target_world: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.target_world, dtype=float)
        if np.linalg.norm(t - self.entry.position) < 1e-9:
            raise ValueError("entry and target coincide")
        object.__setattr__(self, "target_world", t)

    @property
    def direction(self) -> np.ndarray:
        d = self.target_world - self.entry.position
        return d / np.linalg.norm(d)

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.target_world - self.entry.position))


@dataclass(frozen=True)
class TipFeedback:
    distance_to_ventricle_mm: float
    inside: bool | None  # None when the ventricle mesh is not watertight
    deviation_from_plan_mm: float | None
    depth_along_plan_mm: float | None

    def to_dict(self) -> dict:
        return {
            "distance_to_ventricle_mm": self.distance_to_ventricle_mm,
            "inside": self.inside,
            "deviation_from_plan_mm": self.deviation_from_plan_mm,
            "depth_along_plan_mm": self.depth_along_plan_mm,
        }


def place_entry_point(screen_ray: Ray, head_mesh: TriangleMesh,
                      planned_model=None) -> EntryPoint:
    """Nearest ray hit on the head surface becomes the entry point."""
    hit = ray_mesh_intersect(screen_ray, head_mesh)
    if hit is None:
        raise NoSurfaceHit("entry ray does not intersect the head surface")
    planned = None if planned_model is None else np.asarray(planned_model, dtype=float)
    return EntryPoint(position=hit.point, planned_model=planned)


def compute_tre(reg: RegistrationResult | None, planned_model_point,
                true_world_point) -> float:
    """Distance between the registered planned point and its true location.

    Ground truth exists only in simulation; the workbench displays this
    against the scenario's stored true point, mirroring a phantom evaluation.
    """
    if reg is None:
        raise NotRegistered("no registration available for TRE")
    mapped = reg.transform.apply(np.asarray(planned_model_point, dtype=float))
    return float(np.linalg.norm(mapped - np.asarray(true_world_point, dtype=float)))


def catheter_tip(pose: MarkerPose, model: CatheterModel) -> tuple[np.ndarray, tuple[np.ndarray, np.ndarray]]:
    """Tip position plus the marker-origin-to-tip overlay segment."""
    tip = pose.apply(model.marker_to_tip_offset)
    return tip, (pose.translation, tip)


def tip_feedback(tip, ventricle_mesh_world: TriangleMesh,
                 plan: TrajectoryPlan | None = None) -> TipFeedback:
    """Live spatial feedback for the catheter tip.

    The inside test needs a watertight mesh; when the mesh is open the
    distance is still reported and `inside` is None.
    """
    tip = np.asarray(tip, dtype=float)
    distance, _ = point_mesh_distance(tip, ventricle_mesh_world)
    inside = point_inside_mesh(tip, ventricle_mesh_world) if ventricle_mesh_world.watertight else None

    deviation = depth = None
    if plan is not None:
        rel = tip - plan.entry.position
        depth = float(np.dot(rel, plan.direction))
        deviation = float(np.linalg.norm(rel - depth * plan.direction))
    return TipFeedback(
        distance_to_ventricle_mm=distance,
        inside=inside,
        deviation_from_plan_mm=deviation,
        depth_along_plan_mm=depth,
    )
