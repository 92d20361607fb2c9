"""
The powered exponential kernel on the unit circle, its Gram matrix on a uniform grid
and the eigenbasis shared by the RKHS mean and the Gaussian process noise.

Closed curves `f: [0, 1] -> R` with `f(0) = f(1)` are stored on `m` distinct grid points
`t_i = i/m`. The endpoint `t = 1` is identified with `t = 0` and is only written out again
when a closed curve is exported.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from properpath import ProperPath

from .errors import DataError, DomainError, InvariantError, NumericalError

logger = logging.getLogger(__name__)

CLAMP_RELATIVE_THRESHOLD = 1e-12
UNIT_TOLERANCE = 1e-9

EIGENVALUES_FILE = "eigenvalues.csv"
EIGENVECTORS_FILE = "eigenvectors.csv"


@dataclass(frozen=True)
class CircleGrid:
    """
    A uniform grid of `m` distinct parameters `t_i = i/m` on `[0, 1)`.

    All grid functions are compared with the uniform quadrature inner product
    `<f, g> = (1/m) * sum_i f(t_i) g(t_i)`, see `inner_product`.
    """

    m: int

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise DomainError(f"Grid size 'm' must be a positive integer, got {self.m!r}.")

    @cached_property
    def points(self) -> NDArray[np.float64]:
        return np.arange(self.m, dtype=np.float64) / self.m

    @property
    def closed_points(self) -> NDArray[np.float64]:
        """The grid points with the closing parameter `t = 1` appended (export only)."""
        return np.append(self.points, 1.0)

    def inner_product(self, f: ArrayLike, g: ArrayLike) -> float | NDArray[np.float64]:
        """
        Uniform quadrature inner product over the last axis. Broadcasts, so a stack
        of curves against one curve returns one value per curve.
        """
        f, g = np.asarray(f, dtype=np.float64), np.asarray(g, dtype=np.float64)
        if f.shape[-1] != self.m or g.shape[-1] != self.m:
            raise DomainError(
                f"Curves must have {self.m} samples on this grid, got "
                f"{f.shape[-1]} and {g.shape[-1]}."
            )
        return np.sum(f * g, axis=-1) / self.m


@dataclass(frozen=True)
class PeriodicKernelParams:
    """
    Parameters of `k(s, t) = exp(-(d(w(s), w(t)) / rho) ** alpha)`.

    Attributes:
        rho (float): The kernel range, strictly positive.
        alpha (float): The smoothness, in `(0, 1]`.
    """

    rho: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.rho) and self.rho > 0):
            raise DomainError(f"Kernel range 'rho' must be positive, got {self.rho}.")
        if not (0 < self.alpha <= 1):
            raise DomainError(
                f"Kernel smoothness 'alpha' must be in (0, 1], got {self.alpha}."
            )


def wrap(t: ArrayLike) -> NDArray[np.float64]:
    """
    Wraps parameters of the unit interval around the unit circle,
    `w(t) = (cos 2 pi t, sin 2 pi t)`, so that `w(0) = w(1)`.

    Args:
        t: A parameter (or array of parameters) in `[0, 1]`.

    Returns:
        An array with a trailing axis of length 2.

    Raises:
        DomainError: If any parameter lies outside `[0, 1]`.
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any((t < 0) | (t > 1)) or not np.all(np.isfinite(t)):
        raise DomainError("Circle parameters must lie in [0, 1].")
    angle = 2 * np.pi * t
    point = np.stack([np.cos(angle), np.sin(angle)], axis=-1)
    # w(1) must be w(0) bit for bit; sin(2 pi) is not exactly zero in floating point.
    return np.where(np.expand_dims(t == 1, -1), np.array([1.0, 0.0]), point)


def circle_distance(a: ArrayLike, b: ArrayLike) -> float:
    """
    The geodesic distance `arccos <a, b>` between two points of the unit circle, in `[0, pi]`.

    The value is computed as `2 atan2(|a - b|, |a + b|)`, which equals the arccosine of the
    clamped inner product but keeps full precision for nearly coincident and nearly
    antipodal points.

    Raises:
        DomainError: If `a` or `b` is not a unit vector within `1e-9`.
    """
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    for point in (a, b):
        if point.shape != (2,) or abs(np.linalg.norm(point) - 1) > UNIT_TOLERANCE:
            raise DomainError(f"{point!r} is not a point on the unit circle.")
    return float(2 * math.atan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def _arc_length(s: NDArray[np.float64], t: NDArray[np.float64]) -> NDArray[np.float64]:
    # Arc length between w(s) and w(t), taken in parameter space.
    gap = np.mod(np.abs(s - t), 1.0)
    return 2 * np.pi * np.minimum(gap, 1.0 - gap)


def _powered_exponential(
    distance: NDArray[np.float64], params: PeriodicKernelParams
) -> NDArray[np.float64]:
    return np.exp(-np.power(distance / params.rho, params.alpha))


def kernel_eval(s: float, t: float, params: PeriodicKernelParams) -> float:
    """
    Evaluates the periodic kernel `k(s, t)`.

    Example:
        ```python
        kernel_eval(0.0, 0.5, PeriodicKernelParams(rho=1, alpha=1))
        # Returns exp(-pi) = 0.0432139...
        ```

    Raises:
        DomainError: If `s` or `t` lies outside `[0, 1]` or `params` is not a
            `PeriodicKernelParams` instance.
    """
    if not isinstance(params, PeriodicKernelParams):
        raise DomainError(f"Invalid kernel parameters: {params!r}.")
    for value in (s, t):
        if not (0 <= value <= 1):
            raise DomainError(f"Kernel arguments must lie in [0, 1], got {value}.")
    distance = _arc_length(np.float64(s), np.float64(t))
    return float(_powered_exponential(distance, params))


def build_kernel_matrix(
    grid: CircleGrid, params: PeriodicKernelParams
) -> NDArray[np.float64]:
    """
    Builds `[K]_ij = k(t_i, t_j)` on the grid. Since the grid is uniform on the circle,
    the distance only depends on `(i - j) mod m`, which makes `K` exactly symmetric and
    circulant.
    """
    index = np.arange(grid.m)
    steps = np.abs(index[:, None] - index[None, :])
    steps = np.minimum(steps, grid.m - steps)
    return _powered_exponential(2 * np.pi * steps / grid.m, params)


@dataclass(frozen=True, eq=False)
class KernelEigenbasis:
    """
    The retained eigenpairs of a kernel matrix on a circle grid.

    `matrix_eigenvalues` are the eigenvalues of `K` itself (they sum to `trace(K) = m`).
    `eigenvalues` are those of the covariance operator `f -> (1/m) K f`, i.e.
    `matrix_eigenvalues / m`. Paired with `eigenvectors`, which are orthonormal under
    the grid inner product, they give `K = sum_j eigenvalues[j] * outer(b_j, b_j)`,
    and the Gaussian process with covariance `K` has exactly `rkhs_norm` as its
    Cameron-Martin norm.

    Attributes:
        grid (CircleGrid): The grid the basis lives on.
        eigenvalues (NDArray): Operator eigenvalues, strictly positive, descending, shape `(p,)`.
        eigenvectors (NDArray): Rows `b_j` of shape `(p, m)` with `<b_i, b_j> = delta_ij`.
        kernel_matrix (NDArray): The symmetric `m x m` matrix `K`.
        matrix_eigenvalues (NDArray): Eigenvalues of `K`, shape `(p,)`.
        params (Optional[PeriodicKernelParams]): Kernel parameters, when known.
    """

    grid: CircleGrid
    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]
    kernel_matrix: NDArray[np.float64]
    matrix_eigenvalues: NDArray[np.float64]
    params: Optional[PeriodicKernelParams] = field(default=None)

    @property
    def rank(self) -> int:
        return len(self.eigenvalues)

    def project(self, curves: ArrayLike) -> NDArray[np.float64]:
        """Coefficients `<f, b_j>` of one curve (shape `(m,)`) or a stack of curves."""
        curves = np.asarray(curves, dtype=np.float64)
        if curves.shape[-1] != self.grid.m:
            raise DomainError(
                f"Curves must have {self.grid.m} samples, got {curves.shape[-1]}."
            )
        return curves @ self.eigenvectors.T / self.grid.m

    def reconstruct(self, coefficients: ArrayLike) -> NDArray[np.float64]:
        return np.asarray(coefficients, dtype=np.float64) @ self.eigenvectors

    def reconstruction_error(self) -> float:
        """Relative Frobenius error of `sum_j eigenvalues[j] * outer(b_j, b_j)` against `K`."""
        approx = (self.eigenvectors.T * self.eigenvalues) @ self.eigenvectors
        return float(
            np.linalg.norm(self.kernel_matrix - approx)
            / np.linalg.norm(self.kernel_matrix)
        )

    def is_compatible(self, other: "KernelEigenbasis") -> bool:
        """Whether two bases describe the same eigenmodes (same object or equal arrays)."""
        if other is self:
            return True
        return (
            self.grid == other.grid
            and self.rank == other.rank
            and np.array_equal(self.eigenvalues, other.eigenvalues)
            and np.array_equal(self.eigenvectors, other.eigenvectors)
        )

    def save_bundle(self, directory: Path) -> None:
        """
        Writes the basis as a CSV bundle: `eigenvalues.csv` (one matrix eigenvalue per row)
        and `eigenvectors.csv` (an `m x p` matrix, one eigenvector per column). Kernel
        parameters, when known, go into the header of `eigenvalues.csv`.
        """
        directory = ProperPath(directory, kind="dir", err_logger=logger)
        directory.create()
        header = f"m={self.grid.m}"
        if self.params is not None:
            header += f",rho={self.params.rho!r},alpha={self.params.alpha!r}"
        np.savetxt(
            directory / EIGENVALUES_FILE,
            self.matrix_eigenvalues,
            fmt="%.17g",
            header=header,
        )
        np.savetxt(
            directory / EIGENVECTORS_FILE,
            self.eigenvectors.T / math.sqrt(self.grid.m),
            fmt="%.17g",
            delimiter=",",
        )

    @classmethod
    def load_bundle(cls, directory: Path) -> "KernelEigenbasis":
        """
        Reads a bundle written by `save_bundle`. The kernel matrix is rebuilt from the
        stored parameters when present, otherwise from the stored eigenpairs.

        Raises:
            DataError: If the bundle is missing or inconsistent.
        """
        directory = Path(directory)
        values_path = directory / EIGENVALUES_FILE
        try:
            with values_path.open() as f:
                header = f.readline().lstrip("#").strip()
            meta = dict(item.split("=", 1) for item in header.split(","))
            matrix_eigenvalues = np.atleast_1d(np.loadtxt(values_path))
            unit_vectors = np.loadtxt(
                directory / EIGENVECTORS_FILE, delimiter=",", ndmin=2
            )
            grid = CircleGrid(int(meta["m"]))
        except (OSError, ValueError, KeyError) as e:
            logger.debug(f"Could not read eigenbasis bundle {directory}: {e!r}")
            raise DataError(f"Invalid eigenbasis bundle: {e}", path=directory) from e
        if unit_vectors.shape != (grid.m, len(matrix_eigenvalues)):
            raise DataError(
                f"Eigenvector matrix has shape {unit_vectors.shape}, expected "
                f"({grid.m}, {len(matrix_eigenvalues)}).",
                path=directory,
            )
        params = (
            PeriodicKernelParams(float(meta["rho"]), float(meta["alpha"]))
            if "rho" in meta
            else None
        )
        if params is not None:
            kernel_matrix = build_kernel_matrix(grid, params)
        else:
            kernel_matrix = (unit_vectors * matrix_eigenvalues) @ unit_vectors.T
        return cls(
            grid=grid,
            eigenvalues=matrix_eigenvalues / grid.m,
            eigenvectors=unit_vectors.T * math.sqrt(grid.m),
            kernel_matrix=kernel_matrix,
            matrix_eigenvalues=matrix_eigenvalues,
            params=params,
        )


def eigendecompose(
    kernel_matrix: ArrayLike,
    params: Optional[PeriodicKernelParams] = None,
) -> KernelEigenbasis:
    """
    Eigendecomposes a symmetric kernel matrix into a `KernelEigenbasis`.

    Eigenpairs are sorted by descending eigenvalue. Eigenvalues below
    `1e-12 * max eigenvalue` (including negative round-off) are clamped to zero and their
    eigenvectors dropped.

    Args:
        kernel_matrix: A symmetric `m x m` matrix.
        params: The kernel parameters `K` was built with, recorded on the basis.

    Raises:
        DomainError: If the matrix is not square and symmetric.
        NumericalError: If the eigen solver fails.
        InvariantError: If no strictly positive eigenvalue is left after clamping.
    """
    kernel_matrix = np.array(kernel_matrix, dtype=np.float64)
    if (
        kernel_matrix.ndim != 2
        or kernel_matrix.shape[0] != kernel_matrix.shape[1]
        or not np.all(np.isfinite(kernel_matrix))
    ):
        raise DomainError("Kernel matrix must be a finite square matrix.")
    if not np.allclose(kernel_matrix, kernel_matrix.T, rtol=0, atol=1e-12):
        raise DomainError("Kernel matrix must be symmetric.")
    m = kernel_matrix.shape[0]
    try:
        values, vectors = np.linalg.eigh(kernel_matrix)
    except np.linalg.LinAlgError as e:
        logger.debug(f"Eigen solver failed for a {m}x{m} kernel matrix: {e!r}")
        raise NumericalError(f"Eigendecomposition failed: {e}") from e
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]
    if values[0] <= 0:
        raise InvariantError("Kernel matrix has no positive eigenvalue.")
    keep = values > CLAMP_RELATIVE_THRESHOLD * values[0]
    if not np.all(keep):
        logger.debug(
            f"Dropping {np.count_nonzero(~keep)} of {m} eigenmodes below the clamping "
            f"threshold."
        )
    values, vectors = values[keep], vectors[:, keep]
    if np.any(values <= 0):
        raise InvariantError("A retained eigenvalue is not strictly positive.")
    return KernelEigenbasis(
        grid=CircleGrid(m),
        eigenvalues=values / m,
        eigenvectors=vectors.T * math.sqrt(m),
        kernel_matrix=kernel_matrix,
        matrix_eigenvalues=values,
        params=params,
    )


def build_eigenbasis(grid: CircleGrid, params: PeriodicKernelParams) -> KernelEigenbasis:
    return eigendecompose(build_kernel_matrix(grid, params), params=params)


def load_or_build_eigenbasis(
    grid: CircleGrid,
    params: PeriodicKernelParams,
    cache_dir: Optional[Path] = None,
) -> KernelEigenbasis:
    """
    Returns the eigenbasis for `(grid, params)`, reading it from (and storing it to) a
    CSV bundle under `cache_dir` when a cache directory is given. A cache entry that
    cannot be read is rebuilt and overwritten.

    Example:
        ```python
        from radialgdp.dirs import eigenbasis_cache_dir

        basis = load_or_build_eigenbasis(
            CircleGrid(80), PeriodicKernelParams(), cache_dir=eigenbasis_cache_dir()
        )
        ```
    """
    if cache_dir is None:
        return build_eigenbasis(grid, params)
    entry = Path(cache_dir) / f"m{grid.m}_rho{params.rho!r}_alpha{params.alpha!r}"
    if (entry / EIGENVALUES_FILE).exists():
        try:
            basis = KernelEigenbasis.load_bundle(entry)
        except DataError as e:
            logger.warning(f"Ignoring unreadable eigenbasis cache entry. {e}")
        else:
            if basis.params == params and basis.grid == grid:
                logger.debug(f"Loaded eigenbasis from cache: {entry}")
                return basis
    basis = build_eigenbasis(grid, params)
    try:
        basis.save_bundle(entry)
    except OSError as e:
        logger.warning(f"Could not write eigenbasis cache entry {entry}: {e!r}")
    return basis
