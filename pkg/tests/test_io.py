import numpy as np
import pytest

from conftest import unit_cube, uv_sphere
from ventronav.acquisition import NoiseModel
from ventronav.errors import EmptyMesh, IoError, ParseError
from ventronav.geometry import TriangleMesh, point_inside_mesh, point_mesh_distance
from ventronav.io import (
    PhantomParams,
    Scenario,
    generate_phantom,
    load_landmarks,
    load_mesh,
    save_landmarks,
    save_mesh,
    summarize_csv,
    write_report,
)
from ventronav.landmarks import LANDMARK_ORDER, LandmarkSet
from ventronav.montecarlo import TrialResult
from ventronav.registration import detect_degeneracy


def canonical_cube():
    return unit_cube().canonicalized()


# mesh formats

def test_binary_stl_round_trip_unit_cube(tmp_path):
    cube = canonical_cube()
    path = tmp_path / "cube.stl"
    save_mesh(cube, path)
    back = load_mesh(path)
    assert len(back) == 12
    lo, hi = back.bounds
    assert np.allclose(lo, 0.0) and np.allclose(hi, 1.0)
    assert np.array_equal(back.vertices, cube.vertices)
    assert np.array_equal(back.triangles, cube.triangles)


def test_ascii_stl_round_trip(tmp_path):
    cube = canonical_cube()
    path = tmp_path / "cube_ascii.stl"
    save_mesh(cube, path, ascii_stl=True)
    assert path.read_text().startswith("solid")
    back = load_mesh(path)
    assert np.array_equal(back.vertices, cube.vertices)
    assert np.array_equal(back.triangles, cube.triangles)


def test_obj_round_trip_preserves_vertex_order(tmp_path):
    sphere = uv_sphere(radius=40.0, n_lat=8, n_lon=8)
    path = tmp_path / "sphere.obj"
    save_mesh(sphere, path)
    back = load_mesh(path)
    assert np.array_equal(back.vertices, sphere.vertices)
    assert np.array_equal(back.triangles, sphere.triangles)


def test_obj_and_stl_encodings_agree(tmp_path):
    cube = canonical_cube()
    save_mesh(cube, tmp_path / "cube.obj")
    save_mesh(cube, tmp_path / "cube.stl")
    from_obj = load_mesh(tmp_path / "cube.obj")
    from_stl = load_mesh(tmp_path / "cube.stl")
    a = np.array(sorted(map(tuple, from_obj.vertices)))
    b = np.array(sorted(map(tuple, from_stl.vertices)))
    assert np.allclose(a, b, atol=1e-6)


def test_scale_override_converts_units(tmp_path):
    cube = canonical_cube()
    path = tmp_path / "cube.stl"
    save_mesh(cube, path)
    metres_to_mm = load_mesh(path, scale=1000.0)
    assert np.allclose(metres_to_mm.bounds[1], 1000.0)


def test_truncated_binary_stl_raises_parse_error(tmp_path):
    cube = canonical_cube()
    path = tmp_path / "cube.stl"
    save_mesh(cube, path)
    data = path.read_bytes()
    (tmp_path / "broken.stl").write_bytes(data[: len(data) - 30])
    with pytest.raises(ParseError) as exc:
        load_mesh(tmp_path / "broken.stl")
    assert exc.value.offset is not None


def test_malformed_ascii_stl_raises(tmp_path):
    path = tmp_path / "bad.stl"
    path.write_text("solid x\n facet normal 0 0 1\n outer loop\n"
                    " vertex 0 0 zero\n endloop\n endfacet\nendsolid x\n")
    with pytest.raises(ParseError):
        load_mesh(path)


def test_obj_face_with_slashes_and_negative_indices(tmp_path):
    path = tmp_path / "mesh.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 -1\n")
    mesh = load_mesh(path)
    assert len(mesh) == 1
    assert np.array_equal(mesh.triangles[0], [0, 1, 2])


def test_empty_and_missing_mesh(tmp_path):
    path = tmp_path / "empty.stl"
    path.write_text("solid nothing\nendsolid nothing\n")
    with pytest.raises(EmptyMesh):
        load_mesh(path)
    with pytest.raises(ParseError):
        load_mesh(tmp_path / "nope.stl")
    with pytest.raises(ParseError):
        load_mesh(tmp_path / "wrong.ply")


# landmark files

def test_landmark_file_round_trip(tmp_path):
    pts = {lid: np.array([float(i), 2.0, 3.5]) for i, lid in enumerate(LANDMARK_ORDER)}
    lm = LandmarkSet(space="model", points=pts)
    path = save_landmarks(lm, tmp_path / "landmarks.json")
    back = load_landmarks(path, expected_space="model")
    assert back.space == "model"
    assert np.array_equal(back.as_array(), lm.as_array())
    with pytest.raises(ParseError):
        load_landmarks(path, expected_space="world")


# phantom generation

@pytest.fixture(scope="module")
def phantom_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("phantom")
    generate_phantom(out)
    return out


def test_phantom_landmarks_well_conditioned(phantom_dir):
    scenario = Scenario.load(phantom_dir / "scenario.json")
    diag = detect_degeneracy(scenario.model_landmarks.as_array())
    assert diag.classification == "well-conditioned"
    assert diag.condition_ratio > 1e-3


def test_phantom_landmarks_on_surface(phantom_dir):
    scenario = Scenario.load(phantom_dir / "scenario.json")
    head = scenario.load_head_mesh()
    for p in scenario.model_landmarks.points.values():
        d, _ = point_mesh_distance(p, head)
        assert d < 0.5


def test_phantom_round_trips_bit_identically(phantom_dir, tmp_path):
    path = phantom_dir / "scenario.json"
    scenario = Scenario.load(path)
    resaved = tmp_path / "again.json"
    scenario.save(resaved)
    assert resaved.read_bytes() == path.read_bytes()


def test_phantom_geometry_invariants(phantom_dir):
    scenario = Scenario.load(phantom_dir / "scenario.json")
    head = scenario.load_head_mesh()
    ventricles = scenario.load_ventricle_mesh()
    assert head.watertight
    assert ventricles.watertight
    assert point_inside_mesh(scenario.planned_target_model, ventricles)
    d, _ = point_mesh_distance(scenario.planned_entry_model, head)
    assert d < 1e-9  # entry is a mesh vertex
    # entry sits roughly the documented arc from the nasion analog
    assert 90.0 < scenario.metadata["entry_to_nasion_mm"] < 130.0
    assert 35.0 < scenario.metadata["entry_to_target_mm"] < 60.0


def test_phantom_scene_builds(phantom_dir):
    scenario = Scenario.load(phantom_dir / "scenario.json")
    scene = scenario.build_scene()
    assert scene.true_world_landmarks.complete
    ctx = scenario.build_context(scene)
    assert ctx.catheter is not None


def test_phantom_params_round_trip():
    params = PhantomParams(seed=7, nose_amp_mm=10.0)
    assert PhantomParams.from_dict(params.to_dict()) == params


# reports

def fake_results(n):
    rng = np.random.default_rng(3)
    out = []
    for i in range(n):
        res = {lid: float(rng.uniform(0.5, 3.0)) for lid in LANDMARK_ORDER}
        out.append(TrialResult(trial=i, seed=f"1:0:{i}", rmse=float(rng.uniform(1, 4)),
                               tre=float(rng.uniform(0.5, 6)), scale=float(rng.uniform(0.97, 1.03)),
                               residuals=res))
    return out


def test_report_csv_and_summary(tmp_path):
    results = fake_results(3)
    summary = write_report(results, tmp_path)
    lines = (tmp_path / "trials.csv").read_text().splitlines()
    assert len(lines) == 4  # header + 3 rows
    assert lines[0].startswith("trial,seed,rmse_mm,tre_mm,scale,res_right_tragus")
    mean = sum(r.rmse for r in results) / 3
    assert abs(summary["rmse_mm"]["mean"] - mean) < 1e-12
    assert 0.0 <= summary["fraction_tre_below_threshold"] <= 1.0
    assert summary["tre_threshold_mm"] == 5.0


def test_summarize_reproduces_summary_exactly(tmp_path):
    from ventronav.io.scenario import canonical_json

    write_report(fake_results(50), tmp_path)
    recomputed = summarize_csv(tmp_path / "trials.csv")
    assert canonical_json(recomputed) == (tmp_path / "summary.json").read_text()


def test_report_renders_figures(tmp_path):
    write_report(fake_results(40), tmp_path)
    assert (tmp_path / "rmse_hist.png").stat().st_size > 0
    assert (tmp_path / "tre_hist.png").stat().st_size > 0


def test_report_rejects_empty():
    with pytest.raises(IoError):
        write_report([], "/tmp/nowhere")
