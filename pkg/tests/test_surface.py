import math

import numpy as np
import pytest

from radialgdp.circle_kernel import CircleGrid
from radialgdp.errors import AlignmentError, DomainError
from radialgdp.surface import (
    DiskSurface,
    PointCloud,
    RadialCurveSet,
    SyntheticFaceConfig,
    apply_rotation,
    area_weights,
    curves_to_point_cloud,
    extract_radial_curves,
    generalized_procrustes,
    generate_synthetic_dataset,
    normalize,
    point_cloud_to_curves,
    procrustes_align,
    procrustes_objective,
    surface_area,
    surface_centroid,
    template_surface,
)


def polar_surface(n_r, m, fn):
    radii = np.arange(1, n_r + 1) / n_r
    grid = CircleGrid(m)
    r, theta = np.meshgrid(radii, 2 * np.pi * grid.points, indexing="ij")
    return DiskSurface(radii, grid, np.stack(fn(r, theta), axis=-1))


def flat_disk(n_r=100, m=100):
    return polar_surface(n_r, m, lambda r, t: (r * np.cos(t), r * np.sin(t), 0 * r))


def hemisphere(n_r=200, m=200):
    return polar_surface(
        n_r,
        m,
        lambda r, t: (
            np.sin(np.pi * r / 2) * np.cos(t),
            np.sin(np.pi * r / 2) * np.sin(t),
            np.cos(np.pi * r / 2),
        ),
    )


def rotation_matrix(axis, angle):
    axis = np.asarray(axis, dtype=float) / np.linalg.norm(axis)
    cross = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + math.sin(angle) * cross + (1 - math.cos(angle)) * cross @ cross


@pytest.fixture(scope="module")
def face():
    config = SyntheticFaceConfig(n_radii=30, m=40, perturbation_amplitude=0.05)
    return generate_synthetic_dataset(1, config, seed=5).surfaces[0]


def test_disk_surface_validation():
    grid = CircleGrid(4)
    with pytest.raises(DomainError):
        DiskSurface(np.array([0.5, 0.4]), grid, np.zeros((2, 4, 3)))
    with pytest.raises(DomainError):
        DiskSurface(np.array([0.5, 1.0]), grid, np.zeros((2, 5, 3)))
    with pytest.raises(DomainError):
        DiskSurface(np.array([0.0, 1.0]), grid, np.zeros((2, 4, 3)))


def test_surface_area_of_flat_disk():
    assert surface_area(flat_disk()) == pytest.approx(math.pi, abs=1e-3)


def test_surface_area_of_hemisphere():
    assert surface_area(hemisphere()) == pytest.approx(2 * math.pi, abs=1e-2)


@pytest.mark.parametrize("c", [0.1, 2.5, 10.0])
def test_surface_area_is_homogeneous(face, c):
    assert surface_area(face.scaled(c)) == pytest.approx(c**2 * surface_area(face), rel=1e-9)


def test_surface_area_rejects_degenerate_grid():
    with pytest.raises(DomainError):
        surface_area(flat_disk(n_r=1, m=10))
    with pytest.raises(DomainError):
        surface_area(flat_disk(n_r=10, m=2))


def test_area_weights_are_nonnegative(face):
    weights = area_weights(face)
    assert weights.shape == (face.n_r, face.m)
    assert np.all(weights >= 0)


def test_normalize_flat_disk():
    """Tests that the flat unit disk is scaled by 1 / sqrt(area) and stays centered."""
    disk = flat_disk()
    area = surface_area(disk)
    normalized = normalize(disk)
    np.testing.assert_allclose(normalized.points, disk.points / math.sqrt(area), atol=1e-9)
    assert surface_area(normalized) == pytest.approx(1, abs=1e-6)


def test_normalize_invariants(face):
    normalized = normalize(face)
    assert surface_area(normalized) == pytest.approx(1, abs=1e-6)
    np.testing.assert_allclose(surface_centroid(normalized), 0, atol=1e-9)
    np.testing.assert_allclose(normalize(normalized).points, normalized.points, atol=1e-9)


@pytest.mark.parametrize("c", [0.1, 7.3])
def test_normalize_is_scale_and_translation_invariant(face, c):
    moved = face.scaled(c).translated([0.4, -2.0, 3.5])
    np.testing.assert_allclose(normalize(moved).points, normalize(face).points, atol=1e-9)


def test_normalize_rejects_zero_area():
    grid = CircleGrid(8)
    with pytest.raises(DomainError):
        normalize(DiskSurface(np.array([0.5, 1.0]), grid, np.zeros((2, 8, 3))))


def test_procrustes_identity(face):
    cloud = normalize(face).to_point_cloud()
    rotation, aligned = procrustes_align(cloud, cloud)
    np.testing.assert_allclose(rotation, np.eye(3), atol=1e-9)
    np.testing.assert_allclose(aligned.points, cloud.points, atol=1e-9)


def test_procrustes_recovers_known_rotation(face):
    template = normalize(face).to_point_cloud()
    R = rotation_matrix([1.0, 2.0, -0.5], 0.7)
    rotation, _ = procrustes_align(apply_rotation(template, R), template)
    np.testing.assert_allclose(rotation, R.T, atol=1e-9)


def test_procrustes_rotation_is_proper_and_never_worse():
    rng = np.random.default_rng(8)
    for _ in range(25):
        cloud = PointCloud(rng.standard_normal((30, 3)), registered=True)
        template = PointCloud(rng.standard_normal((30, 3)), registered=True)
        rotation, _ = procrustes_align(cloud, template)
        assert np.linalg.det(rotation) == pytest.approx(1, abs=1e-12)
        np.testing.assert_allclose(rotation.T @ rotation, np.eye(3), atol=1e-12)
        assert procrustes_objective(cloud, template, rotation) <= procrustes_objective(
            cloud, template
        ) + 1e-12


def test_procrustes_alignment_errors():
    two = PointCloud(np.eye(3)[:2], registered=True)
    with pytest.raises(AlignmentError):
        procrustes_align(two, two)
    line = PointCloud(np.outer(np.arange(5.0), [1.0, 1.0, 0.0]), registered=True)
    with pytest.raises(AlignmentError) as excinfo:
        procrustes_align(line, line)
    assert excinfo.value.diagnostic is not None
    loose = PointCloud(np.eye(3))
    with pytest.raises(AlignmentError):
        procrustes_align(loose, loose)


def test_generalized_procrustes_undoes_rotations(face):
    base = normalize(face)
    rotated = [base, base.rotated(rotation_matrix([0, 0, 1], 0.3))]
    aligned, _ = generalized_procrustes(rotated, iterations=2)
    np.testing.assert_allclose(aligned[1].points, aligned[0].points, atol=1e-9)


def test_extract_radial_curves_of_flat_disk():
    """Tests the analytic radial curves r cos(2 pi t), r sin(2 pi t), 0 of the flat disk."""
    disk = flat_disk(n_r=20, m=16)
    curves = extract_radial_curves(disk, J=4)
    np.testing.assert_allclose(curves.radii_selected, [0.25, 0.5, 0.75, 1.0])
    t = 2 * np.pi * disk.angles.points
    for j, r in enumerate(curves.radii_selected):
        np.testing.assert_allclose(curves.coordinate("x")[j], r * np.cos(t), atol=1e-15)
        np.testing.assert_allclose(curves.coordinate("y")[j], r * np.sin(t), atol=1e-15)
        np.testing.assert_array_equal(curves.coordinate("z")[j], 0)


def test_extract_every_circle_when_j_equals_n_r():
    disk = flat_disk(n_r=10, m=8)
    curves = extract_radial_curves(disk, J=10)
    np.testing.assert_array_equal(curves.radii_selected, disk.radii)


def test_extract_rejects_too_many_curves():
    with pytest.raises(DomainError):
        extract_radial_curves(flat_disk(n_r=10, m=8), J=11)


def test_extract_is_local_to_selected_circles():
    disk = flat_disk(n_r=8, m=8)
    points = disk.points.copy()
    points[0, :, 2] = 5.0  # r = 1/8 is not selected for J = 4
    curves_a = extract_radial_curves(disk, J=4)
    curves_b = extract_radial_curves(disk.with_points(points), J=4)
    np.testing.assert_array_equal(curves_a.curves, curves_b.curves)


def test_radial_curves_are_scale_invariant(face):
    reference = extract_radial_curves(normalize(face), J=10).curves
    for c in (0.1, 7.3):
        moved = face.scaled(c).translated([1.0, 2.0, 3.0])
        np.testing.assert_allclose(
            extract_radial_curves(normalize(moved), J=10).curves, reference, atol=1e-9
        )


def test_curves_to_point_cloud_closes_every_curve():
    curve_set = RadialCurveSet(
        np.array([1.0]), np.arange(12.0).reshape(1, 3, 4), CircleGrid(4)
    )
    cloud = curves_to_point_cloud(curve_set)
    assert cloud.P == 5
    np.testing.assert_array_equal(cloud.points[0], cloud.points[-1])
    round_trip = point_cloud_to_curves(cloud, curve_set.radii_selected, curve_set.grid)
    np.testing.assert_array_equal(round_trip.curves, curve_set.curves)


def test_curves_to_point_cloud_size():
    config = SyntheticFaceConfig(n_radii=46, m=80)
    curves = extract_radial_curves(template_surface(config), J=23)
    closed = curves.closed_curves()
    np.testing.assert_array_equal(closed[:, :, 0], closed[:, :, -1])
    assert curves_to_point_cloud(curves).P == 1863


def test_generator_without_perturbation_reproduces_template():
    config = SyntheticFaceConfig(n_radii=10, m=12, perturbation_amplitude=0.0)
    dataset = generate_synthetic_dataset(3, config, seed=1)
    for surface in dataset.surfaces:
        np.testing.assert_array_equal(surface.points, dataset.template.points)
    assert all(cloud.registered for cloud in dataset.clouds)


def test_generator_is_deterministic():
    config = SyntheticFaceConfig(n_radii=10, m=12, rotation_jitter_deg=5, scale_jitter=0.1)
    first = generate_synthetic_dataset(4, config, seed=17)
    second = generate_synthetic_dataset(4, config, seed=17)
    for a, b in zip(first.surfaces, second.surfaces):
        np.testing.assert_array_equal(a.points, b.points)


def test_generator_rejects_invalid_settings():
    with pytest.raises(DomainError):
        SyntheticFaceConfig(perturbation_amplitude=-1)
    with pytest.raises(DomainError):
        generate_synthetic_dataset(0, SyntheticFaceConfig(n_radii=4, m=4), seed=0)


@pytest.mark.slow
def test_generator_mean_height_matches_template():
    """Tests the sample mean of 10^4 height fields against the template within 4 SE."""
    n = 10_000
    config = SyntheticFaceConfig(n_radii=6, m=8, perturbation_amplitude=0.05)
    dataset = generate_synthetic_dataset(n, config, seed=3)
    heights = np.stack([surface.points[..., 2] for surface in dataset.surfaces])
    standard_error = heights.std(axis=0) / math.sqrt(n)
    deviation = np.abs(heights.mean(axis=0) - dataset.template.points[..., 2])
    assert np.all(deviation <= 4 * standard_error + 1e-12)
