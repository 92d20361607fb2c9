"""
The point-wise GDP baseline: independent Gaussian noise on every coordinate of every point
of the registered point-cloud mean, with the total budget split evenly over the `3P`
releases.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import DomainError
from .surface import PointCloud
from .utils import Coordinate, make_rng


@dataclass(frozen=True, eq=False)
class PointwiseSensitivity:
    """
    Per-entry sensitivities `Delta_kl = max_{i,j} |X_i[k, l] - X_j[k, l]|`, shape `(P, 3)`.

    The bound is computed from the confidential dataset itself.
    """

    deltas: NDArray[np.float64]

    def __post_init__(self):
        deltas = np.asarray(self.deltas, dtype=np.float64)
        if deltas.ndim != 2 or deltas.shape[1] != 3:
            raise DomainError(f"Sensitivities need shape (P, 3), got {deltas.shape}.")
        if not np.all(np.isfinite(deltas)) or np.any(deltas < 0):
            raise DomainError("Sensitivities must be finite and nonnegative.")
        object.__setattr__(self, "deltas", deltas)

    @property
    def P(self) -> int:
        return self.deltas.shape[0]

    def noise_scales(self, mu_p: float) -> NDArray[np.float64]:
        """The per-entry noise standard deviations `Delta_kl / mu_p`."""
        _check_mu(mu_p)
        return self.deltas / mu_p


def _check_mu(mu: float) -> None:
    if not (math.isfinite(mu) and mu > 0):
        raise DomainError(f"Budget must be positive, got {mu}.")


def _stack(dataset: Sequence[PointCloud]) -> NDArray[np.float64]:
    if not dataset:
        raise DomainError("The dataset is empty.")
    if not all(cloud.registered for cloud in dataset):
        raise DomainError("Point-wise statistics need registered point clouds.")
    sizes = {cloud.P for cloud in dataset}
    if len(sizes) != 1:
        raise DomainError(f"Registered clouds differ in size: {sorted(sizes)}.")
    return np.stack([cloud.points for cloud in dataset])


def pointwise_mean(dataset: Sequence[PointCloud]) -> PointCloud:
    """
    The entry-wise mean of registered point clouds.

    Raises:
        DomainError: If the dataset is empty, unregistered or the clouds differ in size.
    """
    return PointCloud(_stack(dataset).mean(axis=0), registered=True)


def pointwise_sensitivity(dataset: Sequence[PointCloud]) -> PointwiseSensitivity:
    """
    The largest pairwise difference of every entry, i.e. its range over the dataset;
    invariant under permutations of the dataset.
    """
    stacked = _stack(dataset)
    return PointwiseSensitivity(np.ptp(stacked, axis=0))


def split_budget(mu_total: float, P: int) -> float:
    """
    Splits `mu_total` evenly over `3P` releases, `mu_p = sqrt(mu_total^2 / (3P))`.

    Example:
        ```python
        split_budget(3.0, 7150)  # 0.0204837
        ```
    """
    _check_mu(mu_total)
    if P < 1:
        raise DomainError(f"Point count 'P' must be positive, got {P}.")
    return math.sqrt(mu_total**2 / (3 * P))


def pointwise_sanitize(
    mean: PointCloud, sens: PointwiseSensitivity, mu_p: float, seed: int
) -> PointCloud:
    """
    Adds `Delta_kl / mu_p * z_kl` with independent standard normal `z_kl` to every entry.
    Entry `(k, l)` draws from its own stream `(seed, k, l)`, so the noise of a point does
    not depend on how many points the cloud has.

    Raises:
        DomainError: If `mu_p <= 0` or the shapes of mean and sensitivities differ.
    """
    scales = sens.noise_scales(mu_p)
    if mean.points.shape != scales.shape:
        raise DomainError(
            f"Mean has shape {mean.points.shape} but sensitivities {scales.shape}."
        )
    noise = np.array(
        [
            [make_rng(seed, k, w.index).standard_normal() for w in Coordinate]
            for k in range(mean.P)
        ]
    )
    return PointCloud(mean.points + scales * noise, registered=mean.registered)
