"""Patient-to-image registration.

The one-shot path fits a least-squares similarity transform to the seven named
landmark correspondences (SVD of the centered cross-covariance with a
determinant-sign correction, scale from the variance ratio) and reports the
RMSE of the residuals. An iterative-closest-point refinement handles
correspondence-free targets (point clouds or the head-surface mesh).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    DegenerateConfiguration,
    IncompleteCorrespondence,
    ScaleOutOfBounds,
    TooFewPoints,
)
from .geometry import Rotation, SimilarityTransform, TriangleMesh
from .geometry.mesh import _closest_on_triangles
from .landmarks import LANDMARK_ORDER, LandmarkId, LandmarkSet

COLLINEAR_RATIO = 1e-3
COPLANAR_RATIO = 1e-3
DEFAULT_SCALE_BOUNDS = (0.9, 1.1)


@dataclass(frozen=True)
class DegeneracyDiagnostic:
    """Eigenvalue conditioning of a point configuration."""

    classification: str  # "collinear" | "coplanar" | "well-conditioned"
    condition_ratio: float  # smallest / largest covariance eigenvalue

    def to_dict(self) -> dict:
        return {"classification": self.classification,
                "condition_ratio": self.condition_ratio}


@dataclass(frozen=True)
class RegistrationResult:
    transform: SimilarityTransform  # model -> world
    rmse: float  # mm
    residuals: dict[LandmarkId, float] = field(default_factory=dict)
    condition: DegeneracyDiagnostic | None = None
    iterations: int = 1
    point_residuals: np.ndarray | None = None  # per-source-point, ICP only

    def to_dict(self) -> dict:
        return {
            "transform": self.transform.to_dict(),
            "rmse_mm": self.rmse,
            "residuals_mm": {lid.value: r for lid, r in self.residuals.items()},
            "condition": self.condition.to_dict() if self.condition else None,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class IcpConfig:
    max_iterations: int = 50
    convergence_tol: float = 1e-6  # mm change in RMSE
    scale_mode: str = "fixed"  # "fixed" | "estimated"
    scale_bounds: tuple[float, float] = DEFAULT_SCALE_BOUNDS

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be > 0")
        if self.scale_mode not in ("fixed", "estimated"):
            raise ValueError(f"unknown scale_mode {self.scale_mode!r}")
        lo, hi = self.scale_bounds
        if not lo <= 1.0 <= hi:
            raise ValueError("scale_bounds must contain 1")


def detect_degeneracy(points) -> DegeneracyDiagnostic:
    """Classify a configuration by the eigenvalues of its centered covariance."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) < 3:
        raise TooFewPoints(f"need >= 3 points, got {len(pts)}")
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered / len(pts)
    eig = np.linalg.eigvalsh(cov)  # ascending
    largest = float(eig[2])
    if largest <= 0.0:
        return DegeneracyDiagnostic("collinear", 0.0)
    ratio = max(float(eig[0]) / largest, 0.0)
    second_ratio = max(float(eig[1]) / largest, 0.0)
    if second_ratio < COLLINEAR_RATIO:
        return DegeneracyDiagnostic("collinear", ratio)
    if ratio < COPLANAR_RATIO:
        return DegeneracyDiagnostic("coplanar", ratio)
    return DegeneracyDiagnostic("well-conditioned", ratio)


def fit_similarity(source: np.ndarray, target: np.ndarray, scale_mode: str = "estimated",
                   scale_bounds: tuple[float, float] = DEFAULT_SCALE_BOUNDS,
                   clamp_scale: bool = False):
    """Closed-form least-squares similarity fit on paired (N, 3) arrays.

    Minimizes sum ||s R source_i + t - target_i||^2. The translation satisfies
    t = mean(target) - s R mean(source), so the fit maps the source centroid
    onto the target centroid. Returns (transform, rmse, residual_norms).

    With scale_mode="estimated", a scale outside scale_bounds raises
    ScaleOutOfBounds unless clamp_scale, in which case it is projected onto
    the bounds (used inside ICP to keep iterations monotone).
    """
    src = np.asarray(source, dtype=float)
    dst = np.asarray(target, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError("source/target must be matching (N, 3) arrays")
    n = len(src)
    if n < 3:
        raise TooFewPoints(f"need >= 3 correspondences, got {n}")
    if detect_degeneracy(src).classification == "collinear":
        raise DegenerateConfiguration("source points are collinear")
    if detect_degeneracy(dst).classification == "collinear":
        raise DegenerateConfiguration("target points are collinear")

    src_mean = src.mean(axis=0)
    dst_mean = dst.mean(axis=0)
    x = src - src_mean
    y = dst - dst_mean

    cov = y.T @ x / n
    u, d, vt = np.linalg.svd(cov)
    sign = np.sign(np.linalg.det(u) * np.linalg.det(vt))
    if sign == 0:
        sign = 1.0
    s_diag = np.array([1.0, 1.0, sign])
    r = u @ np.diag(s_diag) @ vt

    if scale_mode == "estimated":
        var_src = float(np.einsum("ij,ij->", x, x)) / n
        scale = float((d * s_diag).sum()) / var_src
        lo, hi = scale_bounds
        if not lo <= scale <= hi:
            if clamp_scale:
                scale = min(max(scale, lo), hi)
            else:
                raise ScaleOutOfBounds(
                    f"estimated scale {scale:.4f} outside [{lo}, {hi}]; check for mis-picked landmarks")
    elif scale_mode == "fixed":
        scale = 1.0
    else:
        raise ValueError(f"unknown scale_mode {scale_mode!r}")

    t = dst_mean - scale * (r @ src_mean)
    transform = SimilarityTransform(scale=scale, rotation=Rotation.from_matrix(r), translation=t)
    res = transform.apply(src) - dst
    norms = np.linalg.norm(res, axis=1)
    rmse = float(np.sqrt(np.mean(norms ** 2)))
    return transform, rmse, norms


def estimate_similarity(model: LandmarkSet, world: LandmarkSet,
                        scale_mode: str = "estimated",
                        scale_bounds: tuple[float, float] = DEFAULT_SCALE_BOUNDS) -> RegistrationResult:
    """Fit the model->world similarity transform over matched named landmarks.

    Needs at least 3 non-collinear matched landmarks; the guided workflow
    always supplies all seven.
    """
    ids = _matched_ids(model, world, min_count=3)
    src = model.as_array(ids)
    dst = world.as_array(ids)
    transform, rmse, norms = fit_similarity(src, dst, scale_mode, scale_bounds)
    return RegistrationResult(
        transform=transform,
        rmse=rmse,
        residuals={lid: float(r) for lid, r in zip(ids, norms)},
        condition=detect_degeneracy(dst),
        iterations=1,
    )


def compute_rmse(transform: SimilarityTransform, model: LandmarkSet, world: LandmarkSet) -> float:
    """Root-mean-square residual of the transform over matched landmarks."""
    ids = _matched_ids(model, world, min_count=1)
    res = transform.apply(model.as_array(ids)) - world.as_array(ids)
    return float(np.sqrt(np.mean(np.sum(res ** 2, axis=1))))


def _matched_ids(model: LandmarkSet, world: LandmarkSet, min_count: int) -> tuple[LandmarkId, ...]:
    if set(model.points) != set(world.points) or len(model.points) < min_count:
        only_model = sorted(lid.value for lid in model.points.keys() - world.points.keys())
        only_world = sorted(lid.value for lid in world.points.keys() - model.points.keys())
        raise IncompleteCorrespondence(
            f"landmark sets must match on >= {min_count} ids "
            f"(unmatched model: {only_model}, world: {only_world})")
    return tuple(lid for lid in LANDMARK_ORDER if lid in model.points)


def aggregate_repeated_picks(picks) -> tuple[np.ndarray, float]:
    """Centroid of repeated picks of one landmark plus the RMS spread about it."""
    pts = np.atleast_2d(np.asarray(picks, dtype=float))
    if len(pts) < 1:
        raise TooFewPoints("need at least one pick")
    centroid = pts.mean(axis=0)
    spread = float(np.sqrt(np.mean(np.sum((pts - centroid) ** 2, axis=1))))
    return centroid, spread


class _ClosestPointTarget:
    """Nearest-neighbour lookup against either a point cloud or a mesh surface."""

    def __init__(self, target):
        if isinstance(target, TriangleMesh):
            self.mesh = target
            self.tree = None
        else:
            pts = np.asarray(target, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) == 0:
                raise ValueError("point target must be a nonempty (N, 3) array")
            self.mesh = None
            self.points = pts
            self.tree = cKDTree(pts)

    def closest(self, query: np.ndarray) -> np.ndarray:
        if self.tree is not None:
            _, idx = self.tree.query(query)
            return self.points[idx]
        v0, e1, e2 = self.mesh.triangle_corners()
        leaves = self.mesh.leaves()
        out = np.empty_like(query)
        for i, p in enumerate(query):
            lb = leaves.box_lower_bounds(p)
            order = np.argsort(lb, kind="stable")
            best_d2, best_pt = np.inf, None
            for leaf in order:
                if lb[leaf] >= best_d2:
                    break
                s, c = leaves.starts[leaf], leaves.counts[leaf]
                idx = leaves.order[s:s + c]
                pts, d2 = _closest_on_triangles(p, v0[idx], e1[idx], e2[idx])
                k = int(np.argmin(d2))
                if d2[k] < best_d2:
                    best_d2, best_pt = float(d2[k]), pts[k]
            out[i] = best_pt
        return out


def icp_refine(source, target, init: SimilarityTransform | None = None,
               cfg: IcpConfig | None = None) -> RegistrationResult:
    """Iterative closest point: alternate correspondence and similarity fitting.

    Non-convergence within max_iterations is not an error; the result carries
    the iteration count and final RMSE. The RMSE sequence is non-increasing.
    """
    cfg = cfg or IcpConfig()
    init = init or SimilarityTransform.identity()
    src = np.asarray(source, dtype=float)
    if src.ndim != 2 or src.shape[1] != 3 or len(src) == 0:
        raise ValueError("source must be a nonempty (N, 3) array")
    lookup = _ClosestPointTarget(target)

    transform = init
    rmse = np.inf
    norms = np.zeros(len(src))
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        moved = transform.apply(src)
        matched = lookup.closest(moved)
        rmse_before = float(np.sqrt(np.mean(np.sum((moved - matched) ** 2, axis=1))))
        transform, rmse, norms = fit_similarity(
            src, matched, cfg.scale_mode, cfg.scale_bounds, clamp_scale=True)
        if rmse_before - rmse < cfg.convergence_tol:
            break

    return RegistrationResult(
        transform=transform,
        rmse=rmse,
        residuals={},
        condition=detect_degeneracy(src),
        iterations=iterations,
        point_residuals=norms,
    )


def icp_refine_trace(source, target, init: SimilarityTransform | None = None,
                     cfg: IcpConfig | None = None) -> list[float]:
    """RMSE after each ICP iteration, for monotonicity checks."""
    cfg = cfg or IcpConfig()
    init = init or SimilarityTransform.identity()
    src = np.asarray(source, dtype=float)
    lookup = _ClosestPointTarget(target)
    transform = init
    trace: list[float] = []
    for _ in range(cfg.max_iterations):
        moved = transform.apply(src)
        matched = lookup.closest(moved)
        rmse_before = float(np.sqrt(np.mean(np.sum((moved - matched) ** 2, axis=1))))
        transform, rmse, _ = fit_similarity(
            src, matched, cfg.scale_mode, cfg.scale_bounds, clamp_scale=True)
        trace.append(rmse)
        if rmse_before - rmse < cfg.convergence_tol:
            break
    return trace
