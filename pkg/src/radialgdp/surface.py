"""
Disk-parameterized surfaces `f: D -> R^3` sampled on a polar `(r, theta)` grid.

A surface is normalized to unit area and centered at its area-weighted centroid,
rigidly aligned to a template, and then cut into face radial curves: the closed space
curves `theta -> f(r, theta)` on concentric circles of the disk.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Self, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .circle_kernel import CircleGrid
from .errors import AlignmentError, DomainError
from .utils import Coordinate, make_rng

default_logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class DiskSurface:
    """
    A surface sampled at `f(r_i, theta_j)` with `theta_j = 2 pi t_j` on a circle grid.

    Attributes:
        radii (NDArray): Strictly increasing radii in `(0, 1]`, shape `(n_r,)`.
        angles (CircleGrid): The angular grid of size `m`.
        points (NDArray): Surface points of shape `(n_r, m, 3)`.
    """

    radii: NDArray[np.float64]
    angles: CircleGrid
    points: NDArray[np.float64]

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=np.float64)
        points = np.asarray(self.points, dtype=np.float64)
        if radii.ndim != 1 or len(radii) == 0:
            raise DomainError("Radii must be a nonempty 1D array.")
        if np.any(np.diff(radii) <= 0) or radii[0] <= 0 or radii[-1] > 1:
            raise DomainError("Radii must be strictly increasing within (0, 1].")
        if points.shape != (len(radii), self.angles.m, 3):
            raise DomainError(
                f"Surface points have shape {points.shape}, expected "
                f"({len(radii)}, {self.angles.m}, 3)."
            )
        if not np.all(np.isfinite(points)):
            raise DomainError("Surface coordinates must be finite.")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "points", points)

    @property
    def n_r(self) -> int:
        return len(self.radii)

    @property
    def m(self) -> int:
        return self.angles.m

    def with_points(self, points: ArrayLike) -> Self:
        return type(self)(self.radii, self.angles, np.asarray(points, dtype=np.float64))

    def scaled(self, c: float) -> Self:
        return self.with_points(c * self.points)

    def translated(self, v: ArrayLike) -> Self:
        return self.with_points(self.points + np.asarray(v, dtype=np.float64))

    def rotated(self, rotation: ArrayLike) -> Self:
        """Applies `x -> O x` to every point."""
        return self.with_points(self.points @ np.asarray(rotation, dtype=np.float64).T)

    def to_point_cloud(self) -> "PointCloud":
        """Row-major `(r, theta)` flattening; clouds of surfaces on one grid are registered."""
        return PointCloud(self.points.reshape(-1, 3), registered=True)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    `P` points in `R^3`. A registered cloud shares its row order, point by point, with the
    other clouds of its dataset.
    """

    points: NDArray[np.float64]
    registered: bool = False

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 3 or points.shape[0] < 1:
            raise DomainError(
                f"A point cloud needs shape (P, 3) with P >= 1, got {points.shape}."
            )
        if not np.all(np.isfinite(points)):
            raise DomainError("Point coordinates must be finite.")
        object.__setattr__(self, "points", points)

    @property
    def P(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class RadialCurveSet:
    """
    `J` face radial curves, each made of three coordinate curves on the angle grid.

    Attributes:
        radii_selected (NDArray): The radius of every curve, shape `(J,)`.
        curves (NDArray): Coordinate curves of shape `(J, 3, m)`; axis 1 follows `Coordinate`.
        grid (CircleGrid): The angle grid.
    """

    radii_selected: NDArray[np.float64]
    curves: NDArray[np.float64]
    grid: CircleGrid

    def __post_init__(self):
        curves = np.asarray(self.curves, dtype=np.float64)
        radii = np.asarray(self.radii_selected, dtype=np.float64)
        if curves.ndim != 3 or curves.shape[1:] != (3, self.grid.m):
            raise DomainError(
                f"Radial curves need shape (J, 3, {self.grid.m}), got {curves.shape}."
            )
        if radii.shape != (curves.shape[0],) or curves.shape[0] < 1:
            raise DomainError("Every radial curve needs exactly one radius.")
        if not np.all(np.isfinite(curves)):
            raise DomainError("Curve values must be finite.")
        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "radii_selected", radii)

    @property
    def J(self) -> int:
        return self.curves.shape[0]

    def coordinate(self, coordinate: Coordinate | str) -> NDArray[np.float64]:
        """The `(J, m)` curves of one coordinate."""
        return self.curves[:, Coordinate(coordinate).index, :]

    def closed_curves(self) -> NDArray[np.float64]:
        """Curves of shape `(J, 3, m + 1)` with the first sample repeated at `t = 1`."""
        return np.concatenate([self.curves, self.curves[:, :, :1]], axis=2)


def _angular_derivative(points: NDArray[np.float64]) -> NDArray[np.float64]:
    # Spectral derivative in theta (periodic, axis 1); exact for band-limited curves.
    m = points.shape[1]
    wavenumbers = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        wavenumbers[m // 2] = 0.0
    spectrum = np.fft.fft(points, axis=1)
    return np.real(
        np.fft.ifft(1j * wavenumbers[None, :, None] * spectrum, axis=1)
    )


def _radial_weights(radii: NDArray[np.float64]) -> NDArray[np.float64]:
    # Midpoint cells: [0, (r_1 + r_2)/2], ..., [(r_{n-1} + r_n)/2, r_n].
    edges = np.concatenate([[0.0], (radii[:-1] + radii[1:]) / 2, [radii[-1]]])
    return np.diff(edges)


def area_weights(surface: DiskSurface) -> NDArray[np.float64]:
    """
    Quadrature weights `|f_r x f_theta| dr dtheta` per grid sample, shape `(n_r, m)`.

    Partials are taken by second order finite differences in `r` and spectrally in the
    periodic `theta` direction.

    Raises:
        DomainError: If the grid has fewer than 2 radii or 3 angles.
    """
    if surface.n_r < 2 or surface.m < 3:
        raise DomainError(
            f"Surface area needs at least 2 radii and 3 angles, got "
            f"{surface.n_r} x {surface.m}."
        )
    edge_order = 2 if surface.n_r >= 3 else 1
    f_r = np.gradient(surface.points, surface.radii, axis=0, edge_order=edge_order)
    f_theta = _angular_derivative(surface.points)
    element = np.linalg.norm(np.cross(f_r, f_theta), axis=2)
    return element * _radial_weights(surface.radii)[:, None] * (2 * np.pi / surface.m)


def surface_area(surface: DiskSurface) -> float:
    """The quadrature of `|f_r x f_theta|` over the disk."""
    return float(area_weights(surface).sum())


def surface_centroid(surface: DiskSurface) -> NDArray[np.float64]:
    """The area-weighted centroid `int f |f_r x f_theta| / area`."""
    weights = area_weights(surface)
    total = weights.sum()
    if not (total > 0):
        raise DomainError("The centroid of a zero-area surface is undefined.")
    return np.einsum("ij,ijk->k", weights, surface.points) / total


def normalize(surface: DiskSurface) -> DiskSurface:
    """
    Scales the surface to unit area and moves its centroid to the origin.

    Coordinates are divided by `sqrt(area)` (area scales quadratically with the
    coordinates), then the area-weighted centroid is subtracted. The result does not
    depend on the scale or position of the input: `normalize(c * S + v) == normalize(S)`.

    Raises:
        DomainError: If the surface has zero area.
    """
    area = surface_area(surface)
    if not (math.isfinite(area) and area > 0):
        raise DomainError(f"Cannot normalize a surface of area {area}.")
    scaled = surface.scaled(1 / math.sqrt(area))
    return scaled.translated(-surface_centroid(scaled))


def procrustes_align(
    cloud: PointCloud, template: PointCloud
) -> tuple[NDArray[np.float64], PointCloud]:
    """
    Finds the proper rotation `O` minimizing `||O cloud - template||_F` over registered
    points, rotating about the origin (both clouds are expected to be centered).

    Example:
        ```python
        rotation, aligned = procrustes_align(face.to_point_cloud(), template.to_point_cloud())
        aligned_face = face.rotated(rotation)
        ```

    Returns:
        (tuple[NDArray, PointCloud]): The `3 x 3` rotation with determinant 1 and the
            rotated cloud.

    Raises:
        AlignmentError: If the clouds are not registered with equal `P`, `P < 3`, or the
            cross-covariance has rank below 2 (the rotation is then not unique).
    """
    if not (cloud.registered and template.registered):
        raise AlignmentError("Procrustes alignment needs registered point clouds.")
    if cloud.P != template.P:
        raise AlignmentError(
            f"Clouds differ in size: {cloud.P} and {template.P} points."
        )
    if cloud.P < 3:
        raise AlignmentError(
            f"Procrustes alignment needs at least 3 points, got {cloud.P}.",
            diagnostic=f"P={cloud.P}",
        )
    cross_covariance = cloud.points.T @ template.points
    u, singular_values, vt = np.linalg.svd(cross_covariance)
    if singular_values[0] == 0 or singular_values[1] <= RANK_TOLERANCE * singular_values[0]:
        diagnostic = f"singular values {singular_values.tolist()}"
        default_logger.debug(f"Rank-deficient cross-covariance: {diagnostic}")
        raise AlignmentError(
            "Cross-covariance is rank deficient; the rotation is not unique.",
            diagnostic=diagnostic,
        )
    reflection = np.diag([1.0, 1.0, np.sign(np.linalg.det(vt.T @ u.T))])
    rotation = vt.T @ reflection @ u.T
    return rotation, apply_rotation(cloud, rotation)


def apply_rotation(cloud: PointCloud, rotation: ArrayLike) -> PointCloud:
    """Applies `x -> O x`; registration is preserved."""
    return PointCloud(
        cloud.points @ np.asarray(rotation, dtype=np.float64).T, registered=cloud.registered
    )


def procrustes_objective(
    cloud: PointCloud, template: PointCloud, rotation: Optional[ArrayLike] = None
) -> float:
    rotation = np.eye(3) if rotation is None else np.asarray(rotation)
    return float(np.linalg.norm(cloud.points @ rotation.T - template.points))


def generalized_procrustes(
    surfaces: Sequence[DiskSurface],
    iterations: int = 3,
    template: Optional[DiskSurface] = None,
    logger: Optional[logging.Logger] = None,
) -> tuple[list[DiskSurface], DiskSurface]:
    """
    Rotates every surface onto a common template. The first pass aligns to `template`
    (the first surface by default); each further pass aligns to the point-wise mean of
    the previous pass.

    Returns:
        (tuple[list[DiskSurface], DiskSurface]): The aligned surfaces and the final template.
    """
    logger = logger or default_logger
    if not surfaces:
        raise DomainError("Cannot align an empty list of surfaces.")
    if iterations < 1:
        raise DomainError(f"'iterations' must be positive, got {iterations}.")
    current = template or surfaces[0]
    aligned = list(surfaces)
    for iteration in range(iterations):
        target = current.to_point_cloud()
        aligned = [
            surface.rotated(procrustes_align(surface.to_point_cloud(), target)[0])
            for surface in surfaces
        ]
        current = current.with_points(np.mean([s.points for s in aligned], axis=0))
        logger.debug(f"Procrustes pass {iteration + 1} of {iterations} done.")
    return aligned, current


def select_radii(radii: NDArray[np.float64], J: int) -> NDArray[np.intp]:
    """
    Indices of the surface radii nearest to `j / J`, `j = 1..J`: uniform in `r`, the
    outermost curve at the disk boundary and none at the degenerate center.

    Raises:
        DomainError: If `J` exceeds the number of radii or two targets share a radius.
    """
    if not (1 <= J <= len(radii)):
        raise DomainError(f"Cannot select J={J} curves from {len(radii)} radii.")
    targets = np.arange(1, J + 1) / J
    indices = np.argmin(np.abs(radii[None, :] - targets[:, None]), axis=1)
    if len(np.unique(indices)) != J:
        raise DomainError(
            f"The radii grid is too coarse near some of the {J} target radii."
        )
    return indices


def extract_radial_curves(surface: DiskSurface, J: int) -> RadialCurveSet:
    """
    Cuts `J` face radial curves out of a normalized and aligned surface.

    Example:
        ```python
        curves = extract_radial_curves(normalize(face), J=23)
        curves.coordinate("z")  # shape (23, m)
        ```

    Raises:
        DomainError: If `J` is larger than the number of radii of the surface.
    """
    indices = select_radii(surface.radii, J)
    return RadialCurveSet(
        radii_selected=surface.radii[indices],
        curves=np.transpose(surface.points[indices], (0, 2, 1)),
        grid=surface.angles,
    )


def curves_to_point_cloud(curve_set: RadialCurveSet) -> PointCloud:
    """
    Discretizes closed curves into `J * (m + 1)` points, the closing point of every curve
    included (23 curves at 81 points give 1863 points).
    """
    closed = curve_set.closed_curves()
    return PointCloud(np.transpose(closed, (0, 2, 1)).reshape(-1, 3), registered=True)


def point_cloud_to_curves(
    cloud: PointCloud, radii_selected: ArrayLike, grid: CircleGrid
) -> RadialCurveSet:
    """
    Inverse of `curves_to_point_cloud`.

    Raises:
        DomainError: If the cloud size does not match, or a curve is not closed.
    """
    radii_selected = np.asarray(radii_selected, dtype=np.float64)
    J = len(radii_selected)
    if cloud.P != J * (grid.m + 1):
        raise DomainError(
            f"Expected {J * (grid.m + 1)} points for {J} curves, got {cloud.P}."
        )
    closed = np.transpose(cloud.points.reshape(J, grid.m + 1, 3), (0, 2, 1))
    if not np.array_equal(closed[:, :, 0], closed[:, :, -1]):
        raise DomainError("Every exported curve must end on its first point.")
    return RadialCurveSet(radii_selected, closed[:, :, :-1], grid)


@dataclass(frozen=True)
class SyntheticFaceConfig:
    """
    Settings of the synthetic face generator.

    Attributes:
        n_radii (int): Number of concentric circles sampled, at `r_i = i / n_radii`.
        m (int): Number of angles.
        perturbation_amplitude (float): Scale of the per-individual low-frequency height
            perturbations.
        rotation_jitter_deg (float): Standard deviation, in degrees, of a random rotation
            applied to every individual.
        scale_jitter (float): Standard deviation of the log of a random per-individual scale.
    """

    n_radii: int = 46
    m: int = 80
    perturbation_amplitude: float = 0.05
    rotation_jitter_deg: float = 0.0
    scale_jitter: float = 0.0

    def __post_init__(self):
        if self.n_radii < 2 or self.m < 3:
            raise DomainError("The generator needs at least 2 radii and 3 angles.")
        for name in ("perturbation_amplitude", "rotation_jitter_deg", "scale_jitter"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"'{name}' must be nonnegative, got {value}.")

    @cached_property
    def grid(self) -> tuple[NDArray[np.float64], CircleGrid]:
        return np.arange(1, self.n_radii + 1) / self.n_radii, CircleGrid(self.m)


@dataclass(frozen=True, eq=False)
class SyntheticDataset:
    surfaces: list[DiskSurface]
    clouds: list[PointCloud]
    template: DiskSurface


def _gaussian_bump(x, y, cx, cy, sx, sy):
    return np.exp(-((x - cx) ** 2) / (2 * sx**2) - ((y - cy) ** 2) / (2 * sy**2))


def template_height(x: NDArray[np.float64], y: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Height field of the template face: a nose at the disk center, two symmetric eye
    bumps, a mouth ridge below the nose, on a gently receding dome.
    """
    nose = 0.35 * _gaussian_bump(x, y, 0.0, 0.0, 0.12, 0.16)
    eyes = 0.06 * (
        _gaussian_bump(x, y, 0.35, 0.25, 0.09, 0.07)
        + _gaussian_bump(x, y, -0.35, 0.25, 0.09, 0.07)
    )
    mouth = 0.05 * _gaussian_bump(x, y, 0.0, -0.45, 0.2, 0.04)
    dome = -0.15 * (x**2 + y**2)
    return nose + eyes + mouth + dome


def _perturbation_modes(r, theta) -> NDArray[np.float64]:
    # Low-frequency modes of the height field, shape (6, n_r, m).
    return np.stack(
        [
            np.ones_like(r),
            r * np.cos(theta),
            r * np.sin(theta),
            r**2,
            r**2 * np.cos(2 * theta),
            r**2 * np.sin(2 * theta),
        ]
    )


def _random_rotation(rng: np.random.Generator, sd_deg: float) -> NDArray[np.float64]:
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = math.radians(sd_deg) * rng.standard_normal()
    cross = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + math.sin(angle) * cross + (1 - math.cos(angle)) * cross @ cross


def template_surface(config: SyntheticFaceConfig) -> DiskSurface:
    radii, angles = config.grid
    r, theta = np.meshgrid(radii, 2 * np.pi * angles.points, indexing="ij")
    x, y = r * np.cos(theta), r * np.sin(theta)
    return DiskSurface(radii, angles, np.stack([x, y, template_height(x, y)], axis=-1))


def generate_synthetic_dataset(
    n: int, config: SyntheticFaceConfig, seed: int
) -> SyntheticDataset:
    """
    Generates `n` registered synthetic faces around a shared template. Individual `i`
    draws its perturbation from its own stream `(seed, i)`, so the dataset is reproducible
    and any prefix of it does not depend on `n`.

    Raises:
        DomainError: If `n < 1`.
    """
    if n < 1:
        raise DomainError(f"Dataset size 'n' must be positive, got {n}.")
    template = template_surface(config)
    radii, angles = config.grid
    r, theta = np.meshgrid(radii, 2 * np.pi * angles.points, indexing="ij")
    modes = _perturbation_modes(r, theta)
    surfaces = []
    for i in range(n):
        rng = make_rng(seed, i)
        weights = rng.standard_normal(len(modes))
        points = template.points.copy()
        points[..., 2] += config.perturbation_amplitude * np.tensordot(weights, modes, 1)
        if config.rotation_jitter_deg > 0:
            points = points @ _random_rotation(rng, config.rotation_jitter_deg).T
        if config.scale_jitter > 0:
            points = points * math.exp(config.scale_jitter * rng.standard_normal())
        surfaces.append(DiskSurface(radii, angles, points))
    return SyntheticDataset(
        surfaces=surfaces,
        clouds=[surface.to_point_cloud() for surface in surfaces],
        template=template,
    )
