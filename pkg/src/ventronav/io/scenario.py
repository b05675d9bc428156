"""Scenario files: everything a simulation or guided session needs.

A scenario is a JSON document (schema_version 1) referencing the model-space
head and ventricle meshes, the seven named model landmarks, the ground-truth
model-to-world pose, planned entry/target points, the noise model, camera
intrinsics, the catheter geometry, and the RNG seed. Serialization is
canonical (sorted keys, shortest-round-trip floats) so save/load round trips
are bit-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..acquisition import DEFAULT_INTRINSICS, DEFAULT_STANDOFF_MM, NoiseModel, VirtualScene
from ..errors import ParseError
from ..geometry import CameraIntrinsics, SimilarityTransform, TriangleMesh
from ..guidance import CatheterModel
from ..landmarks import LANDMARK_ORDER, LandmarkSet
from ..session import SessionContext
from .mesh_io import load_mesh

SCHEMA_VERSION = 1


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_landmarks(path, expected_space: str | None = None) -> LandmarkSet:
    """Landmark file: {"schema_version": 1, "space": ..., "landmarks": {name: [x,y,z]}}."""
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ParseError(f"landmark file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid landmark JSON in {path}: {exc}", offset=exc.pos) from exc
    try:
        space = d["space"]
        landmarks = LandmarkSet.from_dict(d["landmarks"], space=space)
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad landmark file {path}: {exc}") from exc
    if expected_space is not None and space != expected_space:
        raise ParseError(f"{path} is tagged {space!r}, expected {expected_space!r}")
    return landmarks


def save_landmarks(landmarks: LandmarkSet, path) -> Path:
    path = Path(path)
    path.write_text(canonical_json({
        "schema_version": SCHEMA_VERSION,
        "space": landmarks.space,
        "landmarks": landmarks.to_dict(),
    }), encoding="utf-8")
    return path


@dataclass
class Scenario:
    name: str
    head_mesh: str  # path relative to the scenario file, model space, mm
    ventricle_mesh: str
    model_landmarks: LandmarkSet
    model_to_world_truth: SimilarityTransform
    planned_entry_model: np.ndarray
    planned_target_model: np.ndarray
    noise: NoiseModel = field(default_factory=NoiseModel)
    catheter_offset: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 150.0]))
    camera: CameraIntrinsics = DEFAULT_INTRINSICS
    standoff_mm: float = DEFAULT_STANDOFF_MM
    seed: int = 0
    scale_mode: str = "estimated"
    scale_bounds: tuple[float, float] = (0.9, 1.1)
    metadata: dict = field(default_factory=dict)
    base_dir: Path | None = None  # runtime only, not serialized

    def __post_init__(self):
        if set(self.model_landmarks.points) != set(LANDMARK_ORDER):
            raise ValueError("scenario landmarks must be exactly the canonical seven")
        self.planned_entry_model = np.asarray(self.planned_entry_model, dtype=float)
        self.planned_target_model = np.asarray(self.planned_target_model, dtype=float)
        self.catheter_offset = np.asarray(self.catheter_offset, dtype=float)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "head_mesh": self.head_mesh,
            "ventricle_mesh": self.ventricle_mesh,
            "units": "mm",
            "model_landmarks": self.model_landmarks.to_dict(),
            "model_to_world_truth": self.model_to_world_truth.to_dict(),
            "planned_entry_model": self.planned_entry_model.tolist(),
            "planned_target_model": self.planned_target_model.tolist(),
            "noise": self.noise.to_dict(),
            "catheter_offset": self.catheter_offset.tolist(),
            "camera": self.camera.to_dict(),
            "standoff_mm": float(self.standoff_mm),
            "seed": int(self.seed),
            "scale_mode": self.scale_mode,
            "scale_bounds": [float(self.scale_bounds[0]), float(self.scale_bounds[1])],
            "metadata": self.metadata,
        }

    @staticmethod
    def from_dict(d: dict, base_dir: Path | None = None) -> "Scenario":
        version = d.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ParseError(f"unsupported scenario schema_version {version!r}")
        return Scenario(
            name=d["name"],
            head_mesh=d["head_mesh"],
            ventricle_mesh=d["ventricle_mesh"],
            model_landmarks=LandmarkSet.from_dict(d["model_landmarks"], space="model"),
            model_to_world_truth=SimilarityTransform.from_dict(d["model_to_world_truth"]),
            planned_entry_model=np.asarray(d["planned_entry_model"], dtype=float),
            planned_target_model=np.asarray(d["planned_target_model"], dtype=float),
            noise=NoiseModel.from_dict(d.get("noise", {})),
            catheter_offset=np.asarray(d.get("catheter_offset", [0.0, 0.0, 150.0]), dtype=float),
            camera=CameraIntrinsics.from_dict(d["camera"]),
            standoff_mm=float(d.get("standoff_mm", DEFAULT_STANDOFF_MM)),
            seed=int(d.get("seed", 0)),
            scale_mode=d.get("scale_mode", "estimated"),
            scale_bounds=tuple(d.get("scale_bounds", (0.9, 1.1))),
            metadata=d.get("metadata", {}),
            base_dir=base_dir,
        )

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(canonical_json(self.to_dict()), encoding="utf-8")
        self.base_dir = path.parent
        return path

    @staticmethod
    def load(path) -> "Scenario":
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ParseError(f"scenario file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid scenario JSON in {path}: {exc}", offset=exc.pos) from exc
        return Scenario.from_dict(d, base_dir=path.parent)

    # derived objects

    def _resolve(self, rel: str) -> Path:
        p = Path(rel)
        if p.is_absolute() or self.base_dir is None:
            return p
        return self.base_dir / p

    def load_head_mesh(self) -> TriangleMesh:
        return load_mesh(self._resolve(self.head_mesh))

    def load_ventricle_mesh(self) -> TriangleMesh:
        return load_mesh(self._resolve(self.ventricle_mesh))

    def build_scene(self) -> VirtualScene:
        return VirtualScene.from_model(
            head_mesh_model=self.load_head_mesh(),
            ventricle_mesh_model=self.load_ventricle_mesh(),
            truth=self.model_to_world_truth,
            model_landmarks=self.model_landmarks,
        )

    def build_context(self, scene: VirtualScene | None = None) -> SessionContext:
        return SessionContext(
            scene=scene or self.build_scene(),
            planned_entry_model=self.planned_entry_model,
            planned_target_model=self.planned_target_model,
            catheter=CatheterModel(self.catheter_offset),
            scale_mode=self.scale_mode,
            scale_bounds=self.scale_bounds,
        )
