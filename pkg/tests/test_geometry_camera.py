import numpy as np
import pytest

from ventronav.errors import BehindCamera, NonPositiveDepth
from ventronav.geometry import (
    CameraIntrinsics,
    CameraPose,
    Rotation,
    look_at_pose,
    pixel_ray,
    project,
    unproject,
)

INTR = CameraIntrinsics(fx=500.0, fy=500.0, cx=0.0, cy=0.0)


def test_project_principal_axis():
    pix, d = project(INTR, CameraPose.identity(), [0.0, 0.0, 100.0])
    assert np.allclose(pix, [0.0, 0.0])
    assert d == pytest.approx(100.0)


def test_project_off_axis():
    # u = fx * x/z = 500 * 10/100 = 50 by the pinhole formula
    pix, d = project(INTR, CameraPose.identity(), [10.0, 0.0, 100.0])
    assert np.allclose(pix, [50.0, 0.0])
    assert d == pytest.approx(100.0)


def test_project_behind_camera():
    with pytest.raises(BehindCamera):
        project(INTR, CameraPose.identity(), [0.0, 0.0, -5.0])


def test_unproject_principal_axis():
    p = unproject(INTR, CameraPose.identity(), [0.0, 0.0], 100.0)
    assert np.allclose(p, [0.0, 0.0, 100.0])


def test_unproject_off_axis():
    # inverse pinhole: x = (u/fx) * d = (50/500) * 100 = 10
    p = unproject(INTR, CameraPose.identity(), [50.0, 0.0], 100.0)
    assert np.allclose(p, [10.0, 0.0, 100.0])


def test_unproject_rejects_nonpositive_depth():
    with pytest.raises(NonPositiveDepth):
        unproject(INTR, CameraPose.identity(), [0.0, 0.0], 0.0)
    with pytest.raises(NonPositiveDepth):
        unproject(INTR, CameraPose.identity(), [0.0, 0.0], -3.0)


def test_project_unproject_round_trip(rng):
    intr = CameraIntrinsics(fx=1500.0, fy=1480.0, cx=960.0, cy=540.0, width=1920, height=1080)
    for _ in range(100):
        pose = CameraPose(rotation=Rotation.random(rng),
                          translation=rng.uniform(-500, 500, size=3))
        pix = rng.uniform([0, 0], [1920, 1080])
        depth = rng.uniform(50.0, 2000.0)
        p = unproject(intr, pose, pix, depth)
        pix2, d2 = project(intr, pose, p)
        assert np.linalg.norm(pix2 - pix) < 1e-9
        assert abs(d2 - depth) < 1e-9


def test_pixel_ray_passes_through_unprojected_point(rng):
    intr = CameraIntrinsics(fx=1500.0, fy=1500.0, cx=960.0, cy=540.0)
    pose = CameraPose(rotation=Rotation.random(rng), translation=rng.uniform(-100, 100, 3))
    pix = np.array([1200.0, 300.0])
    ray = pixel_ray(intr, pose, pix)
    p = unproject(intr, pose, pix, 350.0)
    along = np.dot(p - ray.origin, ray.direction)
    assert np.linalg.norm(ray.at(along) - p) < 1e-9


def test_look_at_pose_centers_target(rng):
    intr = CameraIntrinsics(fx=1500.0, fy=1500.0, cx=960.0, cy=540.0)
    for _ in range(20):
        eye = rng.uniform(-400, 400, size=3)
        target = rng.uniform(-100, 100, size=3)
        if np.linalg.norm(target - eye) < 1.0:
            continue
        pose = look_at_pose(eye, target)
        assert pose.rotation.is_proper()
        pix, d = project(intr, pose, target)
        assert np.linalg.norm(pix - [960.0, 540.0]) < 1e-6
        assert d == pytest.approx(np.linalg.norm(target - eye))


def test_intrinsics_validation():
    with pytest.raises(ValueError):
        CameraIntrinsics(fx=-1.0, fy=500.0, cx=0.0, cy=0.0)
    with pytest.raises(ValueError):
        CameraIntrinsics(fx=500.0, fy=500.0, cx=3000.0, cy=0.0, width=1920, height=1080)
