import math

import numpy as np
import pytest

from radialgdp.circle_kernel import CircleGrid, PeriodicKernelParams, build_eigenbasis
from radialgdp.errors import DomainError
from radialgdp.rkhs_mean import (
    CurveSample,
    RkhsMean,
    ambient_norm,
    rkhs_distance,
    rkhs_inner,
    rkhs_mean,
    rkhs_norm,
)


@pytest.fixture(scope="module")
def basis():
    return build_eigenbasis(CircleGrid(80), PeriodicKernelParams())


def test_curve_sample_validation():
    grid = CircleGrid(8)
    with pytest.raises(DomainError):
        CurveSample(grid, np.zeros((2, 7)))
    with pytest.raises(DomainError):
        CurveSample(grid, np.full((1, 8), np.nan))
    with pytest.raises(DomainError):
        CurveSample(grid, np.zeros((0, 8)))
    assert CurveSample.from_curves(np.ones(8)).n == 1


def test_rkhs_mean_of_zero_curve(basis):
    mean = rkhs_mean(CurveSample(basis.grid, np.zeros((1, 80))), basis, phi=0.3)
    np.testing.assert_array_equal(mean.coefficients, 0)
    np.testing.assert_array_equal(mean.values, 0)


def test_rkhs_mean_single_mode_shrinkage(basis):
    """Tests that a single eigenmode is shrunk by lambda_1 / (lambda_1 + phi)."""
    phi = 0.01
    mean = rkhs_mean(CurveSample(basis.grid, basis.eigenvectors[:1]), basis, phi)
    lam = basis.eigenvalues[0]
    assert mean.coefficients[0] == pytest.approx(lam / (lam + phi), rel=1e-12)
    np.testing.assert_allclose(mean.coefficients[1:], 0, atol=1e-12)


def test_rkhs_mean_cancellation(basis):
    curve = np.sin(2 * np.pi * basis.grid.points) + 0.3
    mean = rkhs_mean(CurveSample(basis.grid, np.stack([curve, -curve])), basis, 0.05)
    np.testing.assert_array_equal(mean.values, 0)


def test_rkhs_mean_rejects_nonpositive_phi(basis):
    sample = CurveSample(basis.grid, np.ones((2, 80)))
    with pytest.raises(DomainError):
        rkhs_mean(sample, basis, 0.0)
    with pytest.raises(DomainError):
        rkhs_mean(sample, basis, -1.0)


def test_rkhs_mean_rejects_grid_mismatch(basis):
    with pytest.raises(DomainError):
        rkhs_mean(CurveSample(CircleGrid(40), np.ones((1, 40))), basis, 0.1)


def test_rkhs_mean_values_follow_coefficients(basis):
    curves = np.random.default_rng(0).standard_normal((5, 80))
    mean = rkhs_mean(CurveSample(basis.grid, curves), basis, 0.01)
    np.testing.assert_array_equal(mean.values, basis.reconstruct(mean.coefficients))


def test_rkhs_norm_examples(basis):
    zero = RkhsMean.from_coefficients(np.zeros(basis.rank), basis, 0.1)
    assert rkhs_norm(zero) == 0
    phi, lam = 0.01, basis.eigenvalues[0]
    single = RkhsMean.from_coefficients(
        np.eye(basis.rank)[0] * lam / (lam + phi), basis, phi
    )
    assert rkhs_norm(single) == pytest.approx(lam / (lam + phi) / math.sqrt(lam), rel=1e-12)


def test_rkhs_norm_triangle_inequality(basis):
    rng = np.random.default_rng(11)
    for _ in range(20):
        a = RkhsMean.from_coefficients(rng.standard_normal(basis.rank), basis, 0.1)
        b = RkhsMean.from_coefficients(rng.standard_normal(basis.rank), basis, 0.1)
        total = RkhsMean.from_coefficients(a.coefficients + b.coefficients, basis, 0.1)
        assert rkhs_norm(total) <= rkhs_norm(a) + rkhs_norm(b) + 1e-9
        assert rkhs_distance(a, b) == pytest.approx(
            rkhs_norm(
                RkhsMean.from_coefficients(a.coefficients - b.coefficients, basis, 0.1)
            )
        )
        assert rkhs_inner(a, a) == pytest.approx(rkhs_norm(a) ** 2)


def test_ambient_norm_examples():
    grid = CircleGrid(80)
    assert ambient_norm(np.zeros(80), grid) == 0
    assert ambient_norm(np.full(80, 3.0), grid) == pytest.approx(3.0, rel=1e-14)
    assert ambient_norm(np.sin(2 * np.pi * grid.points), grid) == pytest.approx(
        math.sqrt(0.5), abs=1e-12
    )


def test_rkhs_mean_shrinks_monotonically_in_phi(basis):
    curves = np.random.default_rng(21).standard_normal((6, 80))
    sample = CurveSample(basis.grid, curves)
    magnitudes = [
        np.abs(rkhs_mean(sample, basis, phi).coefficients) for phi in (1e-4, 1e-2, 1.0, 100.0)
    ]
    for smoother, rougher in zip(magnitudes[1:], magnitudes):
        assert np.all(smoother <= rougher)


@pytest.mark.parametrize("sizes", [(4, 4), (3, 7)])
def test_rkhs_mean_of_pooled_sample_is_weighted_average(basis, sizes):
    rng = np.random.default_rng(sum(sizes))
    first, second = (rng.standard_normal((n, 80)) for n in sizes)
    pooled = rkhs_mean(CurveSample(basis.grid, np.vstack([first, second])), basis, 0.05)
    means = [rkhs_mean(CurveSample(basis.grid, c), basis, 0.05) for c in (first, second)]
    expected = (sizes[0] * means[0].coefficients + sizes[1] * means[1].coefficients) / sum(sizes)
    np.testing.assert_allclose(pooled.coefficients, expected, atol=1e-12)


def test_rkhs_mean_without_smoothing_is_the_projected_mean(basis):
    """Tests that phi -> 0 recovers the plain eigenbasis projection of the sample mean."""
    curves = np.random.default_rng(4).standard_normal((5, 80))
    mean = rkhs_mean(CurveSample(basis.grid, curves), basis, 1e-10)
    projected = basis.reconstruct(basis.project(curves.mean(axis=0)))
    np.testing.assert_allclose(mean.values, projected, atol=1e-5)
