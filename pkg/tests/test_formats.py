import numpy as np
import pytest

from radialgdp.circle_kernel import CircleGrid
from radialgdp.errors import ArtifactNotFoundError, DataError
from radialgdp.formats import (
    read_curve_set_csv,
    read_point_cloud_csv,
    read_surface_csv,
    write_curve_set_csv,
    write_curve_set_obj,
    write_point_cloud_csv,
    write_surface_csv,
    write_surface_obj,
)
from radialgdp.surface import (
    DiskSurface,
    PointCloud,
    SyntheticFaceConfig,
    extract_radial_curves,
    generate_synthetic_dataset,
)


@pytest.fixture(scope="module")
def face():
    config = SyntheticFaceConfig(n_radii=6, m=10)
    return generate_synthetic_dataset(1, config, seed=2).surfaces[0]


def test_surface_csv_round_trip(tmp_path, face):
    path = tmp_path / "surface.csv"
    write_surface_csv(face, path)
    assert path.read_text().splitlines()[0] == "r,theta,x,y,z"
    loaded = read_surface_csv(path)
    assert loaded.angles == face.angles
    np.testing.assert_array_equal(loaded.radii, face.radii)
    np.testing.assert_array_equal(loaded.points, face.points)


def test_curve_set_csv_is_closed_and_round_trips(tmp_path, face):
    curves = extract_radial_curves(face, J=3)
    path = tmp_path / "curves.csv"
    write_curve_set_csv(curves, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "curve,r,t,x,y,z"
    assert len(lines) == 1 + 3 * 11
    first, last = lines[1].split(","), lines[11].split(",")
    assert float(last[2]) == 1.0
    assert first[3:] == last[3:]
    loaded = read_curve_set_csv(path)
    np.testing.assert_array_equal(loaded.curves, curves.curves)
    np.testing.assert_array_equal(loaded.radii_selected, curves.radii_selected)


def test_point_cloud_csv_round_trip(tmp_path):
    cloud = PointCloud(np.random.default_rng(0).standard_normal((7, 3)), registered=True)
    path = tmp_path / "cloud.csv"
    write_point_cloud_csv(cloud, path)
    loaded = read_point_cloud_csv(path)
    np.testing.assert_array_equal(loaded.points, cloud.points)
    assert loaded.registered
    assert not read_point_cloud_csv(path, registered=False).registered


def test_malformed_row_reports_line_number(tmp_path):
    path = tmp_path / "cloud.csv"
    path.write_text("x,y,z\n0,0,0\n1,oops,2\n")
    with pytest.raises(DataError) as excinfo:
        read_point_cloud_csv(path)
    assert excinfo.value.line == 3
    assert str(excinfo.value).startswith(f"{path}:3")


@pytest.mark.parametrize(
    "content",
    ["a,b,c\n0,0,0\n", "x,y,z\n", "x,y,z\n0,0\n", "x,y,z\n0,nan,0\n"],
)
def test_point_cloud_csv_rejects_bad_content(tmp_path, content):
    path = tmp_path / "cloud.csv"
    path.write_text(content)
    with pytest.raises(DataError):
        read_point_cloud_csv(path)


def test_missing_file_raises_artifact_not_found(tmp_path):
    with pytest.raises(ArtifactNotFoundError):
        read_surface_csv(tmp_path / "missing.csv")
    with pytest.raises(FileNotFoundError):
        read_point_cloud_csv(tmp_path / "missing.csv")


def test_surface_csv_rejects_scrambled_grid(tmp_path, face):
    path = tmp_path / "surface.csv"
    write_surface_csv(face, path)
    lines = path.read_text().splitlines()
    lines[2], lines[3] = lines[3], lines[2]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataError) as excinfo:
        read_surface_csv(path)
    assert excinfo.value.line == 3


def test_open_curve_is_rejected(tmp_path, face):
    path = tmp_path / "curves.csv"
    write_curve_set_csv(extract_radial_curves(face, J=2), path)
    lines = path.read_text().splitlines()
    fields = lines[11].split(",")
    fields[5] = "123.5"
    lines[11] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataError) as excinfo:
        read_curve_set_csv(path)
    assert excinfo.value.line == 12


def test_obj_exports(tmp_path, face):
    curves = extract_radial_curves(face, J=3)
    write_curve_set_obj(curves, tmp_path / "curves.obj")
    lines = (tmp_path / "curves.obj").read_text().splitlines()
    assert sum(line.startswith("v ") for line in lines) == 3 * 10
    polylines = [line.split()[1:] for line in lines if line.startswith("l ")]
    assert len(polylines) == 3
    assert all(p[0] == p[-1] and len(p) == 11 for p in polylines)

    write_surface_obj(face, tmp_path / "surface.obj")
    lines = (tmp_path / "surface.obj").read_text().splitlines()
    assert sum(line.startswith("v ") for line in lines) == face.n_r * face.m
    assert sum(line.startswith("l ") for line in lines) == face.n_r + face.m


def test_grid_of_one_circle(tmp_path):
    grid = CircleGrid(5)
    theta = 2 * np.pi * grid.points
    surface = DiskSurface(
        np.array([1.0]), grid, np.stack([np.cos(theta), np.sin(theta), 0 * theta], -1)[None]
    )
    write_surface_csv(surface, tmp_path / "circle.csv")
    np.testing.assert_array_equal(read_surface_csv(tmp_path / "circle.csv").points, surface.points)
