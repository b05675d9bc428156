"""Triangle meshes with ray-intersection and closest-point queries.

Queries run through a flat AABB-leaf acceleration structure; brute-force
variants scan every triangle and are kept as the reference path for tests.
Both paths share the same per-triangle kernels, so they agree bitwise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

DEGENERATE_AREA_MM2 = 1e-12
_LEAF_SIZE = 16
_BOX_PAD = 1e-9


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.origin, dtype=float)
        d = np.asarray(self.direction, dtype=float)
        if o.shape != (3,) or d.shape != (3,):
            raise ValueError("ray origin/direction must be 3-vectors")
        if not (np.all(np.isfinite(o)) and np.all(np.isfinite(d))):
            raise ValueError("ray components must be finite")
        n = float(np.linalg.norm(d))
        if abs(n - 1.0) > 1e-12:
            if n == 0.0:
                raise ValueError("ray direction must be nonzero")
            d = d / n
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "direction", d)

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction

    def to_dict(self) -> dict:
        return {"origin": self.origin.tolist(), "direction": self.direction.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "Ray":
        return Ray(np.asarray(d["origin"], dtype=float), np.asarray(d["direction"], dtype=float))


@dataclass(frozen=True)
class RayHit:
    point: np.ndarray
    t: float
    triangle: int


class TriangleMesh:
    """Indexed triangle mesh in millimetres.

    Degenerate triangles (area < 1e-12 mm^2) are dropped at construction with a
    logged count. Vertex/triangle arrays are frozen after construction; all
    queries are read-only and safe to run concurrently.
    """

    def __init__(self, vertices, triangles):
        v = np.ascontiguousarray(np.asarray(vertices, dtype=float))
        t = np.ascontiguousarray(np.asarray(triangles, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be (N, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("triangles must be (M, 3)")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertex coordinates must be finite")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")

        areas = _triangle_areas(v, t)
        keep = areas >= DEGENERATE_AREA_MM2
        dropped = int((~keep).sum())
        if dropped:
            logger.info("dropped %d degenerate triangles (area < %g mm^2)",
                        dropped, DEGENERATE_AREA_MM2)
            t = t[keep]

        v.flags.writeable = False
        t.flags.writeable = False
        self.vertices = v
        self.triangles = t
        self.watertight = _is_watertight(t)
        self._tri_cache: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        self._leaves: _FlatLeaves | None = None

    def __len__(self) -> int:
        return len(self.triangles)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def triangle_corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(v0, e1, e2): first corners and the two edge vectors, each (M, 3)."""
        if self._tri_cache is None:
            v0 = self.vertices[self.triangles[:, 0]]
            e1 = self.vertices[self.triangles[:, 1]] - v0
            e2 = self.vertices[self.triangles[:, 2]] - v0
            self._tri_cache = (v0, e1, e2)
        return self._tri_cache

    def leaves(self) -> "_FlatLeaves":
        if self._leaves is None:
            self._leaves = _FlatLeaves.build(self)
        return self._leaves

    def transformed(self, transform) -> "TriangleMesh":
        """New mesh with `transform.apply` mapped over the vertices."""
        return TriangleMesh(transform.apply(self.vertices), self.triangles.copy())

    def canonicalized(self) -> "TriangleMesh":
        """Reindex vertices into first-use order and drop unused ones.

        Meshes in this form survive an STL save/load round trip with exact
        vertex/index equality (STL stores a triangle soup).
        """
        order = []
        remap = {}
        for idx in self.triangles.ravel():
            if idx not in remap:
                remap[int(idx)] = len(order)
                order.append(int(idx))
        new_tris = np.array([[remap[int(i)] for i in tri] for tri in self.triangles],
                            dtype=np.int64)
        return TriangleMesh(self.vertices[order], new_tris)


def _triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    if len(triangles) == 0:
        return np.zeros(0)
    v0 = vertices[triangles[:, 0]]
    e1 = vertices[triangles[:, 1]] - v0
    e2 = vertices[triangles[:, 2]] - v0
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)


def _is_watertight(triangles: np.ndarray) -> bool:
    """Closed, consistently oriented 2-manifold: every undirected edge appears
    exactly twice, once per direction."""
    if len(triangles) == 0:
        return False
    i = triangles[:, [0, 1, 2]].ravel()
    j = triangles[:, [1, 2, 0]].ravel()
    if np.any(i == j):
        return False
    n = max(int(i.max()), int(j.max())) + 1
    directed = i.astype(np.int64) * n + j
    if len(np.unique(directed)) != len(directed):
        return False
    und = np.minimum(i, j).astype(np.int64) * n + np.maximum(i, j)
    _, counts = np.unique(und, return_counts=True)
    return bool(np.all(counts == 2))


# per-triangle kernels (shared by brute-force and accelerated paths)

def _cross_vec_rows(u: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """u x rows[i] for a single 3-vector against (M, 3) rows; avoids the
    per-call overhead of np.cross in the hot path."""
    out = np.empty_like(rows)
    out[:, 0] = u[1] * rows[:, 2] - u[2] * rows[:, 1]
    out[:, 1] = u[2] * rows[:, 0] - u[0] * rows[:, 2]
    out[:, 2] = u[0] * rows[:, 1] - u[1] * rows[:, 0]
    return out


def _cross_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


def _ray_triangles(origin: np.ndarray, direction: np.ndarray,
                   v0: np.ndarray, e1: np.ndarray, e2: np.ndarray):
    """Moller-Trumbore over a stack of triangles.

    Returns (t, valid) where valid marks intersections with t > 0 and
    barycentrics inside the triangle (a small tolerance keeps edge hits).
    """
    eps_par = 1e-12
    eps_bary = 1e-10
    pvec = _cross_vec_rows(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = 1.0 / det
        tvec = origin - v0
        u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
        qvec = _cross_rows(tvec, e1)
        v = (qvec @ direction) * inv_det
        t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    valid = ((np.abs(det) > eps_par)
             & (u >= -eps_bary) & (v >= -eps_bary) & (u + v <= 1.0 + eps_bary)
             & (t > 0.0))
    return t, u, v, valid


def _closest_on_triangles(p: np.ndarray, v0: np.ndarray, e1: np.ndarray, e2: np.ndarray):
    """Closest point on each triangle to p (Ericson, Real-Time Collision Detection).

    Vectorized over the triangle stack; returns (points (M,3), squared distances (M,)).
    """
    ap = p - v0
    d1 = np.einsum("ij,ij->i", e1, ap)
    d2 = np.einsum("ij,ij->i", e2, ap)
    bp = ap - e1
    d3 = np.einsum("ij,ij->i", e1, bp)
    d4 = np.einsum("ij,ij->i", e2, bp)
    cp = ap - e2
    d5 = np.einsum("ij,ij->i", e1, cp)
    d6 = np.einsum("ij,ij->i", e2, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    result = np.empty_like(v0)
    remain = np.ones(len(v0), dtype=bool)

    is_a = (d1 <= 0.0) & (d2 <= 0.0)
    result[is_a] = v0[is_a]
    remain &= ~is_a

    is_b = remain & (d3 >= 0.0) & (d4 <= d3)
    result[is_b] = v0[is_b] + e1[is_b]
    remain &= ~is_b

    is_ab = remain & (vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0)
    if is_ab.any():
        w = (d1[is_ab] / (d1[is_ab] - d3[is_ab]))[:, None]
        result[is_ab] = v0[is_ab] + w * e1[is_ab]
        remain &= ~is_ab

    is_c = remain & (d6 >= 0.0) & (d5 <= d6)
    result[is_c] = v0[is_c] + e2[is_c]
    remain &= ~is_c

    is_ac = remain & (vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0)
    if is_ac.any():
        w = (d2[is_ac] / (d2[is_ac] - d6[is_ac]))[:, None]
        result[is_ac] = v0[is_ac] + w * e2[is_ac]
        remain &= ~is_ac

    is_bc = remain & (va <= 0.0) & (d4 - d3 >= 0.0) & (d5 - d6 >= 0.0)
    if is_bc.any():
        d43 = d4[is_bc] - d3[is_bc]
        w = (d43 / (d43 + (d5[is_bc] - d6[is_bc])))[:, None]
        result[is_bc] = (v0[is_bc] + e1[is_bc]) + w * (e2[is_bc] - e1[is_bc])
        remain &= ~is_bc

    if remain.any():
        denom = 1.0 / (va[remain] + vb[remain] + vc[remain])
        v = (vb[remain] * denom)[:, None]
        w = (vc[remain] * denom)[:, None]
        result[remain] = v0[remain] + v * e1[remain] + w * e2[remain]

    diff = result - p
    return result, np.einsum("ij,ij->i", diff, diff)


class _FlatLeaves:
    """One-level AABB structure: triangles sorted into spatially coherent
    chunks by recursive median split, one bounding box per chunk."""

    def __init__(self, lo, hi, starts, counts, order):
        self.lo = lo
        self.hi = hi
        self.starts = starts
        self.counts = counts
        self.order = order

    @staticmethod
    def build(mesh: TriangleMesh, leaf_size: int = _LEAF_SIZE) -> "_FlatLeaves":
        v0, e1, e2 = mesh.triangle_corners()
        centers = v0 + (e1 + e2) / 3.0
        tri_lo = np.minimum(v0, np.minimum(v0 + e1, v0 + e2))
        tri_hi = np.maximum(v0, np.maximum(v0 + e1, v0 + e2))

        chunks: list[np.ndarray] = []

        def split(idx: np.ndarray):
            if len(idx) <= leaf_size:
                chunks.append(np.sort(idx))
                return
            c = centers[idx]
            axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
            half = len(idx) // 2
            part = idx[np.argpartition(c[:, axis], half)]
            split(part[:half])
            split(part[half:])

        split(np.arange(len(mesh), dtype=np.int64))

        order = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
        starts = np.zeros(len(chunks), dtype=np.int64)
        counts = np.array([len(c) for c in chunks], dtype=np.int64)
        if len(chunks) > 1:
            starts[1:] = np.cumsum(counts)[:-1]
        lo = np.array([tri_lo[c].min(axis=0) for c in chunks]) - _BOX_PAD
        hi = np.array([tri_hi[c].max(axis=0) for c in chunks]) + _BOX_PAD
        return _FlatLeaves(lo, hi, starts, counts, order)

    def ray_candidates(self, origin: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """Triangle indices (ascending) whose leaf box the ray passes through."""
        near = np.full(len(self.starts), -np.inf)
        far = np.full(len(self.starts), np.inf)
        for k in range(3):
            if abs(direction[k]) > 1e-300:
                ta = (self.lo[:, k] - origin[k]) / direction[k]
                tb = (self.hi[:, k] - origin[k]) / direction[k]
                near = np.maximum(near, np.minimum(ta, tb))
                far = np.minimum(far, np.maximum(ta, tb))
            else:
                outside = (origin[k] < self.lo[:, k]) | (origin[k] > self.hi[:, k])
                far = np.where(outside, -np.inf, far)
        hit = far >= np.maximum(near, 0.0)
        if not hit.any():
            return np.zeros(0, dtype=np.int64)
        parts = [self.order[s:s + c]
                 for s, c in zip(self.starts[hit], self.counts[hit])]
        return np.sort(np.concatenate(parts))

    def box_lower_bounds(self, p: np.ndarray) -> np.ndarray:
        """Squared distance lower bound from p to each leaf box."""
        d = np.maximum(self.lo - p, 0.0) + np.maximum(p - self.hi, 0.0)
        return np.einsum("ij,ij->i", d, d)


# queries

def ray_mesh_intersect(ray: Ray, mesh: TriangleMesh) -> RayHit | None:
    """Nearest intersection (smallest t > 0); ties break to the lowest triangle index."""
    if len(mesh) == 0:
        return None
    candidates = mesh.leaves().ray_candidates(ray.origin, ray.direction)
    if len(candidates) == 0:
        return None
    v0, e1, e2 = mesh.triangle_corners()
    return _best_hit(ray, candidates,
                     v0[candidates], e1[candidates], e2[candidates])


def ray_mesh_intersect_brute(ray: Ray, mesh: TriangleMesh) -> RayHit | None:
    """Reference path: scan every triangle."""
    if len(mesh) == 0:
        return None
    v0, e1, e2 = mesh.triangle_corners()
    return _best_hit(ray, np.arange(len(mesh), dtype=np.int64), v0, e1, e2)


def _best_hit(ray: Ray, indices: np.ndarray, v0, e1, e2) -> RayHit | None:
    t, _, _, valid = _ray_triangles(ray.origin, ray.direction, v0, e1, e2)
    if not valid.any():
        return None
    t_valid = np.where(valid, t, np.inf)
    best = int(np.argmin(t_valid))  # argmin picks the first, indices ascend
    t_best = float(t_valid[best])
    return RayHit(point=ray.at(t_best), t=t_best, triangle=int(indices[best]))


def point_mesh_distance(p, mesh: TriangleMesh) -> tuple[float, np.ndarray]:
    """Minimum unsigned distance from p to the mesh surface, plus the closest point."""
    p = np.asarray(p, dtype=float)
    if len(mesh) == 0:
        raise ValueError("mesh has no triangles")
    leaves = mesh.leaves()
    lb = leaves.box_lower_bounds(p)
    order = np.argsort(lb, kind="stable")
    v0, e1, e2 = mesh.triangle_corners()

    best_d2 = np.inf
    best_idx = -1
    best_point = None
    for leaf in order:
        if lb[leaf] >= best_d2:
            break
        s, c = leaves.starts[leaf], leaves.counts[leaf]
        idx = np.sort(leaves.order[s:s + c])
        pts, d2 = _closest_on_triangles(p, v0[idx], e1[idx], e2[idx])
        k = int(np.argmin(d2))
        if d2[k] < best_d2 or (d2[k] == best_d2 and int(idx[k]) < best_idx):
            best_d2 = float(d2[k])
            best_idx = int(idx[k])
            best_point = pts[k]
    return float(np.sqrt(best_d2)), best_point


def point_mesh_distance_brute(p, mesh: TriangleMesh) -> tuple[float, np.ndarray]:
    """Reference path: scan every triangle."""
    p = np.asarray(p, dtype=float)
    if len(mesh) == 0:
        raise ValueError("mesh has no triangles")
    v0, e1, e2 = mesh.triangle_corners()
    pts, d2 = _closest_on_triangles(p, v0, e1, e2)
    k = int(np.argmin(d2))
    return float(np.sqrt(d2[k])), pts[k]


_PARITY_DIRECTIONS = (
    np.array([0.5424323310283748, 0.6358217297889158, 0.5491735566597969]),
    np.array([-0.7601965595326031, 0.3192756958697544, 0.5660917361883089]),
    np.array([0.2370334666866514, -0.8598927761677664, 0.4518515138516465]),
    np.array([0.9084258952267193, -0.0715276535905344, -0.4118545066516698]),
)


def point_inside_mesh(p, mesh: TriangleMesh) -> bool:
    """Ray-parity inside test. Requires a watertight mesh.

    Retries along alternative directions when a crossing grazes a triangle
    edge, where parity counting is unreliable.
    """
    from ..errors import MeshNotWatertight

    if not mesh.watertight:
        raise MeshNotWatertight("inside test requires a watertight mesh")
    p = np.asarray(p, dtype=float)
    v0, e1, e2 = mesh.triangle_corners()
    edge_tol = 1e-9
    last_parity = False
    for direction in _PARITY_DIRECTIONS:
        t, u, v, valid = _ray_triangles(p, direction, v0, e1, e2)
        crossings = valid & (t > 1e-9)
        n = int(crossings.sum())
        grazing = crossings & ((u < edge_tol) | (v < edge_tol) | (u + v > 1.0 - edge_tol))
        last_parity = (n % 2) == 1
        if not grazing.any():
            return last_parity
    return last_parity
