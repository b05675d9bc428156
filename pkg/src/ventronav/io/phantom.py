"""Procedural synthetic head phantom.

Generates a superellipsoid head (~180 x 220 x 190 mm) with nose and ear
protrusions, two curved ventricle bodies reaching the frontal horns, seven
facial landmarks snapped onto the head surface, and a frontal entry point
about 110 mm posterior-lateral of the nasion analog with its target in the
ipsilateral frontal horn. All dimensions are plausibility choices and the
output is labeled synthetic in the scenario metadata.

Axes (model space): +x patient-left, +y anterior, +z superior, origin at the
head centre. Mesh coordinates are quantized to float32 so binary STL round
trips are exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..geometry import (
    Rotation,
    SimilarityTransform,
    TriangleMesh,
    point_inside_mesh,
    point_mesh_distance,
)
from ..landmarks import LANDMARK_ORDER, LandmarkId, LandmarkSet
from ..noise_profiles import CALIBRATED_NOISE
from ..registration import detect_degeneracy
from .mesh_io import save_mesh
from .scenario import Scenario

# landmark directions on the head, (azimuth u, elevation v) in radians;
# u = 0 is patient-left (+x), u = pi/2 anterior (+y)
_LANDMARK_ANGLES: dict[LandmarkId, tuple[float, float]] = {
    LandmarkId.RIGHT_TRAGUS: (np.pi - 0.12, -0.20),
    LandmarkId.RIGHT_OUTER_CANTHUS: (np.pi / 2 + 0.46, 0.10),
    LandmarkId.RIGHT_INNER_CANTHUS: (np.pi / 2 + 0.16, 0.12),
    LandmarkId.NOSE_BRIDGE: (np.pi / 2, 0.22),
    LandmarkId.LEFT_INNER_CANTHUS: (np.pi / 2 - 0.16, 0.12),
    LandmarkId.LEFT_OUTER_CANTHUS: (np.pi / 2 - 0.46, 0.10),
    LandmarkId.LEFT_TRAGUS: (0.12, -0.20),
}


@dataclass
class PhantomParams:
    half_extents: tuple[float, float, float] = (90.0, 110.0, 95.0)  # x, y, z semi-axes
    exponent: float = 2.5  # superellipsoid squareness
    n_azimuth: int = 48
    n_elevation: int = 32
    nose_amp_mm: float = 14.0
    ear_amp_mm: float = 9.0
    truth_scale: float = 1.0
    truth_max_angle_deg: float = 20.0
    truth_translation_mm: float = 250.0
    entry_arc_mm: float = 110.0  # chord from the nasion analog to the entry
    seed: int = 74520

    def to_dict(self) -> dict:
        d = asdict(self)
        d["half_extents"] = list(self.half_extents)
        return d

    @staticmethod
    def from_dict(d: dict) -> "PhantomParams":
        kwargs = dict(d)
        if "half_extents" in kwargs:
            kwargs["half_extents"] = tuple(float(x) for x in kwargs["half_extents"])
        return PhantomParams(**kwargs)


def _signed_pow(w, e):
    return np.sign(w) * np.abs(w) ** e


def _wrap_angle(du):
    return (du + np.pi) % (2.0 * np.pi) - np.pi


class _HeadSurface:
    """Analytic bumped-superellipsoid surface, evaluated at (u, v)."""

    def __init__(self, params: PhantomParams):
        self.a, self.b, self.c = params.half_extents
        self.e = 2.0 / params.exponent
        self.nose_amp = params.nose_amp_mm
        self.ear_amp = params.ear_amp_mm

    def _radial_bump(self, u, v):
        nose = self.nose_amp * np.exp(-(_wrap_angle(u - np.pi / 2) / 0.20) ** 2
                                      - ((v + 0.05) / 0.16) ** 2)
        ear_l = self.ear_amp * np.exp(-(_wrap_angle(u) / 0.22) ** 2
                                      - ((v + 0.20) / 0.22) ** 2)
        ear_r = self.ear_amp * np.exp(-(_wrap_angle(u - np.pi) / 0.22) ** 2
                                      - ((v + 0.20) / 0.22) ** 2)
        return nose + ear_l + ear_r

    def point(self, u, v):
        cu, su = np.cos(u), np.sin(u)
        cv, sv = np.cos(v), np.sin(v)
        base = np.stack([
            self.a * _signed_pow(cv, self.e) * _signed_pow(cu, self.e),
            self.b * _signed_pow(cv, self.e) * _signed_pow(su, self.e),
            self.c * _signed_pow(sv, self.e),
        ], axis=-1)
        r = np.linalg.norm(base, axis=-1)
        factor = 1.0 + self._radial_bump(u, v) / np.where(r > 0, r, 1.0)
        return base * factor[..., None]


def _build_head_mesh(params: PhantomParams) -> TriangleMesh:
    surf = _HeadSurface(params)
    n_u, n_v = params.n_azimuth, params.n_elevation
    verts = [surf.point(0.0, np.pi / 2)]  # top pole
    for i in range(1, n_v):
        v = np.pi / 2 - np.pi * i / n_v
        for j in range(n_u):
            u = -np.pi + 2.0 * np.pi * j / n_u
            verts.append(surf.point(u, v))
    verts.append(surf.point(0.0, -np.pi / 2))  # bottom pole
    bottom = len(verts) - 1

    def ring(i, j):
        return 1 + (i - 1) * n_u + (j % n_u)

    tris = []
    for j in range(n_u):
        tris.append([0, ring(1, j), ring(1, j + 1)])
    for i in range(1, n_v - 1):
        for j in range(n_u):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append([a, c, b])
            tris.append([b, c, d])
    for j in range(n_u):
        tris.append([bottom, ring(n_v - 1, j + 1), ring(n_v - 1, j)])

    vertices = np.array(verts).astype(np.float32).astype(np.float64)
    return TriangleMesh(vertices, np.array(tris, dtype=np.int64)).canonicalized()


def _swept_tube(spine: np.ndarray, radii: np.ndarray, ring_n: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Closed tube around a polyline spine; returns (vertices, triangles)."""
    tangents = np.gradient(spine, axis=0)
    tangents /= np.linalg.norm(tangents, axis=1, keepdims=True)
    # parallel-transported frame
    normal = np.array([0.0, 0.0, 1.0])
    normal = normal - np.dot(normal, tangents[0]) * tangents[0]
    normal /= np.linalg.norm(normal)

    verts = [spine[0]]  # start cap centre
    rings = []
    for k, (p, t, r) in enumerate(zip(spine, tangents, radii)):
        if k > 0:
            normal = normal - np.dot(normal, t) * t
            normal /= np.linalg.norm(normal)
        binormal = np.cross(t, normal)
        ring = [p + r * (np.cos(a) * normal + np.sin(a) * binormal)
                for a in 2.0 * np.pi * np.arange(ring_n) / ring_n]
        rings.append(len(verts))
        verts.extend(ring)
    verts.append(spine[-1])  # end cap centre
    end_centre = len(verts) - 1

    tris = []
    first = rings[0]
    for j in range(ring_n):
        tris.append([0, first + (j + 1) % ring_n, first + j])
    for k in range(len(rings) - 1):
        r0, r1 = rings[k], rings[k + 1]
        for j in range(ring_n):
            j1 = (j + 1) % ring_n
            tris.append([r0 + j, r0 + j1, r1 + j])
            tris.append([r0 + j1, r1 + j1, r1 + j])
    last = rings[-1]
    for j in range(ring_n):
        tris.append([end_centre, last + j, last + (j + 1) % ring_n])
    return np.array(verts), np.array(tris, dtype=np.int64)


def _bezier(p0, p1, p2, t):
    t = t[:, None]
    return (1 - t) ** 2 * p0 + 2 * (1 - t) * t * p1 + t ** 2 * p2


def _build_ventricle_mesh() -> tuple[TriangleMesh, np.ndarray]:
    """Two mirrored curved bodies; returns (mesh, left frontal-horn target)."""
    p0 = np.array([14.0, 42.0, 50.0])   # frontal horn (anterior-superior)
    p1 = np.array([19.0, -2.0, 48.0])
    p2 = np.array([24.0, -46.0, 24.0])  # occipital end, lower
    t = np.linspace(0.0, 1.0, 14)
    spine = _bezier(p0, p1, p2, t)
    radii = 5.5 + 3.0 * np.sin(np.pi * t) + 1.0 * t  # slight widening towards the body

    left_v, left_t = _swept_tube(spine, radii)
    right_v = left_v * np.array([-1.0, 1.0, 1.0])
    right_t = left_t[:, ::-1] + len(left_v)  # mirrored winding flipped back outward

    verts = np.vstack([left_v, right_v]).astype(np.float32).astype(np.float64)
    tris = np.vstack([left_t, right_t])
    mesh = TriangleMesh(verts, tris).canonicalized()
    target = _bezier(p0, p1, p2, np.array([0.06]))[0]  # just inside the frontal horn
    return mesh, target


def _place_landmarks(head: TriangleMesh, params: PhantomParams) -> LandmarkSet:
    surf = _HeadSurface(params)
    points = {}
    for lid in LANDMARK_ORDER:
        u, v = _LANDMARK_ANGLES[lid]
        analytic = surf.point(u, v)
        _, snapped = point_mesh_distance(analytic, head)
        points[lid] = snapped
    return LandmarkSet(space="model", points=points)


def _kocher_entry(head: TriangleMesh, nasion: np.ndarray, arc_mm: float) -> np.ndarray:
    """Mesh vertex on the upper-left-front scalp whose chord distance from the
    nasion analog is closest to arc_mm."""
    v = head.vertices
    candidates = (v[:, 0] > 15.0) & (v[:, 0] < 45.0) & (v[:, 1] > 0.0) & (v[:, 2] > 40.0)
    if not candidates.any():
        raise RuntimeError("no candidate entry vertices on the generated head")
    idx = np.flatnonzero(candidates)
    d = np.linalg.norm(v[idx] - nasion, axis=1)
    return v[idx[int(np.argmin(np.abs(d - arc_mm)))]]


def _truth_transform(params: PhantomParams, rng: np.random.Generator) -> SimilarityTransform:
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = np.deg2rad(rng.uniform(5.0, params.truth_max_angle_deg))
    translation = rng.uniform(-params.truth_translation_mm, params.truth_translation_mm, size=3)
    return SimilarityTransform(scale=params.truth_scale,
                               rotation=Rotation.from_axis_angle(axis, angle),
                               translation=translation)


def generate_phantom(out_dir, params: PhantomParams | None = None) -> Scenario:
    """Write head.stl, ventricles.stl and scenario.json into out_dir."""
    params = params or PhantomParams()
    rng = np.random.default_rng(params.seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    head = _build_head_mesh(params)
    ventricles, target = _build_ventricle_mesh()
    if not ventricles.watertight:
        raise RuntimeError("generated ventricle mesh is not watertight")
    if not point_inside_mesh(target, ventricles):
        raise RuntimeError("planned target fell outside the ventricle body")

    landmarks = _place_landmarks(head, params)
    diag = detect_degeneracy(landmarks.as_array())
    if diag.classification != "well-conditioned":
        raise RuntimeError(f"generated landmarks are {diag.classification}")

    nasion = landmarks.points[LandmarkId.NOSE_BRIDGE]
    entry = _kocher_entry(head, nasion, params.entry_arc_mm)

    save_mesh(head, out_dir / "head.stl")
    save_mesh(ventricles, out_dir / "ventricles.stl")

    scenario = Scenario(
        name="synthetic-phantom",
        head_mesh="head.stl",
        ventricle_mesh="ventricles.stl",
        model_landmarks=landmarks,
        model_to_world_truth=_truth_transform(params, rng),
        planned_entry_model=entry,
        planned_target_model=target,
        noise=CALIBRATED_NOISE,
        seed=int(rng.integers(0, 2**31 - 1)),
        metadata={
            "synthetic": True,
            "description": "procedurally generated head phantom; dimensions are "
                           "plausibility choices, not measurements",
            "landmark_condition_ratio": diag.condition_ratio,
            "entry_to_nasion_mm": float(np.linalg.norm(entry - nasion)),
            "entry_to_target_mm": float(np.linalg.norm(entry - target)),
            "params": params.to_dict(),
        },
    )
    scenario.save(out_dir / "scenario.json")
    return scenario


def load_params(path) -> PhantomParams:
    with open(path, "r", encoding="utf-8") as fh:
        return PhantomParams.from_dict(json.load(fh))
