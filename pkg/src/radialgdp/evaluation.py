"""
Utility measures of private estimates: the point-wise MSE against a registered reference,
the nearest-point MSE for outputs sampled differently from the reference, and a
scale-only nearest-neighbor registration of an estimate onto a reference.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import KDTree

from .errors import DomainError
from .surface import PointCloud

default_logger = logging.getLogger(__name__)

SCALE_TOLERANCE = 1e-9
MAX_SCALE_ITERATIONS = 50


def mse_pointwise(reference: PointCloud, estimate: PointCloud) -> float:
    """
    `(1/P) sum_k |reference_k - estimate_k|^2`; symmetric in its arguments.

    Raises:
        DomainError: If the clouds are not registered to each other.
    """
    if not (reference.registered and estimate.registered):
        raise DomainError("The point-wise MSE needs registered point clouds.")
    if reference.points.shape != estimate.points.shape:
        raise DomainError(
            f"Cannot compare {reference.P} registered points with {estimate.P}."
        )
    return float(np.mean(np.sum((reference.points - estimate.points) ** 2, axis=1)))


def mse_nearest(reference: PointCloud, estimate: PointCloud) -> float:
    """
    The mean, over estimate points, of the squared distance to the nearest reference point.

    Not symmetric: an estimate concentrated on part of the reference scores 0, while the
    reverse comparison does not.
    """
    return _nearest_objective(KDTree(reference.points), estimate.points)


def _nearest_objective(tree: KDTree, points: np.ndarray) -> float:
    distances, _ = tree.query(points)
    return float(np.mean(distances**2))


@dataclass(frozen=True, eq=False)
class ScaleAlignment:
    """
    Result of `align_scale`.

    Attributes:
        a (float): The scale applied to the estimate.
        scaled (PointCloud): `a * estimate`.
        iterations (int): Number of correspondence updates performed.
        objective_trace (list[float]): `mse_nearest(reference, a_k * estimate)` for the
            starting scale and every accepted update; nonincreasing.
    """

    a: float
    scaled: PointCloud
    iterations: int
    objective_trace: list[float] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def align_scale(
    reference: PointCloud,
    estimate: PointCloud,
    tolerance: float = SCALE_TOLERANCE,
    max_iterations: int = MAX_SCALE_ITERATIONS,
    logger: Optional[logging.Logger] = None,
) -> ScaleAlignment:
    """
    Scales the estimate about the origin onto the reference.

    Alternates nearest-neighbor correspondences `x_c(v)` at the current scale with the
    least-squares scale on fixed correspondences, `a = sum <x_c, v> / sum |v|^2`, until
    `|a_new - a| < tolerance` or `max_iterations` updates. It starts from whichever of
    `a = 1` and the ratio of root mean square norms has the lower objective. An update
    that would increase the objective ends the iteration.

    Example:
        ```python
        result = align_scale(reference, PointCloud(0.5 * reference.points))
        result.a  # 2.0
        ```

    Raises:
        DomainError: If every estimate point is at the origin.
    """
    logger = logger or default_logger
    v = estimate.points
    norm = float(np.sum(v**2))
    if norm == 0:
        logger.debug("Scale alignment of an all-zero estimate requested.")
        raise DomainError("Cannot scale an estimate whose points are all at the origin.")
    tree = KDTree(reference.points)

    ratio = math.sqrt(np.mean(np.sum(reference.points**2, axis=1)) / (norm / len(v)))
    a, objective = min(
        ((candidate, _nearest_objective(tree, candidate * v)) for candidate in (1.0, ratio)),
        key=lambda pair: pair[1],
    )
    trace = [objective]
    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        _, indices = tree.query(a * v)
        a_new = float(np.sum(reference.points[indices] * v) / norm)
        if a_new <= 0:
            break
        objective_new = _nearest_objective(tree, a_new * v)
        if objective_new > objective:
            break
        converged = abs(a_new - a) < tolerance
        a, objective = a_new, objective_new
        trace.append(objective)
        if converged:
            break
    logger.debug(f"Scale alignment ended at a={a} after {iterations} iterations.")
    return ScaleAlignment(
        a=a,
        scaled=PointCloud(a * v, registered=estimate.registered),
        iterations=iterations,
        objective_trace=trace,
    )
