import numpy as np
import pytest

from radialgdp.errors import DomainError
from radialgdp.evaluation import align_scale, mse_nearest, mse_pointwise
from radialgdp.surface import PointCloud


def cloud(points, registered=True):
    return PointCloud(np.asarray(points, dtype=float), registered=registered)


@pytest.fixture(scope="module")
def reference():
    rng = np.random.default_rng(30)
    return cloud(rng.standard_normal((200, 3)))


def test_mse_pointwise_examples(reference):
    assert mse_pointwise(reference, reference) == 0
    shifted = cloud(reference.points + [1.0, 0.0, 0.0])
    assert mse_pointwise(reference, shifted) == pytest.approx(1.0, abs=1e-12)


def test_mse_pointwise_matches_definition_and_is_symmetric(reference):
    other = cloud(np.random.default_rng(31).standard_normal((200, 3)))
    expected = np.mean(np.linalg.norm(reference.points - other.points, axis=1) ** 2)
    assert mse_pointwise(reference, other) == pytest.approx(expected, rel=1e-12)
    assert mse_pointwise(reference, other) == mse_pointwise(other, reference)


def test_mse_pointwise_requires_registration(reference):
    with pytest.raises(DomainError):
        mse_pointwise(reference, cloud(reference.points, registered=False))
    with pytest.raises(DomainError):
        mse_pointwise(reference, cloud(reference.points[:10]))


def test_mse_nearest_examples():
    two = cloud([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]], registered=False)
    one = cloud([[0.5, 0.0, 0.0]], registered=False)
    assert mse_nearest(two, one) == pytest.approx(0.25)
    assert mse_nearest(one, two) == pytest.approx(1.25)


def test_mse_nearest_matches_brute_force(reference):
    estimate = cloud(np.random.default_rng(32).standard_normal((75, 3)), registered=False)
    distances = np.linalg.norm(estimate.points[:, None] - reference.points[None], axis=2)
    expected = np.mean(distances.min(axis=1) ** 2)
    assert mse_nearest(reference, estimate) == pytest.approx(expected, rel=1e-12)
    assert mse_nearest(reference, reference) == 0


def test_align_scale_identity(reference):
    result = align_scale(reference, reference)
    assert result.a == pytest.approx(1.0, abs=1e-12)
    assert result.objective == pytest.approx(0, abs=1e-20)


def test_align_scale_recovers_known_scale(reference):
    result = align_scale(reference, cloud(0.5 * reference.points))
    assert result.a == pytest.approx(2.0, abs=1e-9)
    assert result.objective == pytest.approx(0, abs=1e-18)
    np.testing.assert_allclose(result.scaled.points, reference.points, atol=1e-9)


def test_align_scale_objective_never_increases(reference):
    noisy = cloud(
        1.7 * reference.points + 0.2 * np.random.default_rng(33).standard_normal((200, 3)),
        registered=False,
    )
    result = align_scale(reference, noisy)
    assert np.all(np.diff(result.objective_trace) <= 0)
    assert result.a > 0
    assert result.objective <= mse_nearest(reference, noisy)
    assert result.objective == pytest.approx(mse_nearest(reference, result.scaled), rel=1e-12)


def test_align_scale_rejects_zero_estimate(reference):
    with pytest.raises(DomainError):
        align_scale(reference, cloud(np.zeros((4, 3))))
