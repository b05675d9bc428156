import numpy as np
import pytest

from ventronav.acquisition import VirtualScene
from ventronav.geometry import Rotation, SimilarityTransform, TriangleMesh
from ventronav.landmarks import LANDMARK_ORDER, LandmarkSet


def uv_sphere(radius: float = 80.0, n_lat: int = 24, n_lon: int = 32,
              center=(0.0, 0.0, 0.0)) -> TriangleMesh:
    """Watertight UV sphere with pole fans; chord error ~ R*(1-cos(pi/(2*n_lat)))."""
    center = np.asarray(center, dtype=float)
    verts = [center + np.array([0.0, 0.0, radius])]
    for i in range(1, n_lat):
        theta = np.pi * i / n_lat
        for j in range(n_lon):
            phi = 2.0 * np.pi * j / n_lon
            verts.append(center + radius * np.array([
                np.sin(theta) * np.cos(phi),
                np.sin(theta) * np.sin(phi),
                np.cos(theta),
            ]))
    verts.append(center + np.array([0.0, 0.0, -radius]))
    bottom = len(verts) - 1

    def ring(i, j):
        return 1 + (i - 1) * n_lon + (j % n_lon)

    tris = []
    for j in range(n_lon):
        tris.append([0, ring(1, j), ring(1, j + 1)])
    for i in range(1, n_lat - 1):
        for j in range(n_lon):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            tris.append([a, c, b])
            tris.append([b, c, d])
    for j in range(n_lon):
        tris.append([bottom, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)])
    return TriangleMesh(np.array(verts), np.array(tris))


def random_soup(rng: np.random.Generator, n_triangles: int, extent: float = 100.0) -> TriangleMesh:
    """Random triangle soup inside a cube (not watertight)."""
    centers = rng.uniform(-extent, extent, size=(n_triangles, 3))
    offsets = rng.uniform(-15.0, 15.0, size=(n_triangles, 2, 3))
    verts = np.concatenate([
        centers[:, None, :],
        centers[:, None, :] + offsets,
    ], axis=1).reshape(-1, 3)
    tris = np.arange(3 * n_triangles).reshape(-1, 3)
    return TriangleMesh(verts, tris)


UNIT_CUBE_VERTICES = np.array([
    [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0],
])
UNIT_CUBE_TRIANGLES = np.array([
    [0, 2, 1], [0, 3, 2],  # bottom (z=0)
    [4, 5, 6], [4, 6, 7],  # top (z=1)
    [0, 1, 5], [0, 5, 4],  # y=0
    [1, 2, 6], [1, 6, 5],  # x=1
    [2, 3, 7], [2, 7, 6],  # y=1
    [3, 0, 4], [3, 4, 7],  # x=0
])


def unit_cube() -> TriangleMesh:
    return TriangleMesh(UNIT_CUBE_VERTICES.copy(), UNIT_CUBE_TRIANGLES.copy())


# directions (unit-ish) of the seven facial landmarks on a sphere head stand-in
_LANDMARK_DIRECTIONS = np.array([
    [-0.97, 0.10, -0.22],  # right tragus
    [-0.45, 0.85, 0.10],   # right outer canthus
    [-0.18, 0.96, 0.16],   # right inner canthus
    [0.0, 0.95, 0.31],     # nose bridge
    [0.18, 0.96, 0.16],    # left inner canthus
    [0.45, 0.85, 0.10],    # left outer canthus
    [0.97, 0.10, -0.22],   # left tragus
])


def sphere_scene(radius: float = 80.0,
                 truth: SimilarityTransform | None = None) -> VirtualScene:
    """Small watertight test scene: sphere head, sphere ventricle, landmarks
    sitting exactly on head-mesh vertices."""
    head = uv_sphere(radius=radius, n_lat=24, n_lon=32)
    points = {}
    for lid, direction in zip(LANDMARK_ORDER, _LANDMARK_DIRECTIONS):
        d = direction / np.linalg.norm(direction)
        idx = int(np.argmax(head.vertices @ d))
        points[lid] = head.vertices[idx]
    landmarks = LandmarkSet(space="model", points=points)
    ventricle = uv_sphere(radius=14.0, n_lat=10, n_lon=12, center=(12.0, 18.0, 6.0))
    if truth is None:
        truth = SimilarityTransform(
            scale=1.0,
            rotation=Rotation.from_axis_angle([0.2, -0.3, 0.9], 0.25),
            translation=np.array([150.0, -60.0, 420.0]),
        )
    return VirtualScene.from_model(head_mesh_model=head, ventricle_mesh_model=ventricle,
                                   truth=truth, model_landmarks=landmarks)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
