"""
The smoothness-regularized mean of a sample of closed scalar curves,
`argmin_h sum_i ||f_i - h||^2 + phi ||h||_H^2`, solved in closed form in the kernel
eigenbasis: `h = sum_j lambda_j / (lambda_j + phi) * mean_i <f_i, b_j> * b_j`.
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .circle_kernel import CircleGrid, KernelEigenbasis
from .errors import DomainError


@dataclass(frozen=True, eq=False)
class CurveSample:
    """
    `n` closed scalar curves sampled on a shared circle grid.

    Attributes:
        grid (CircleGrid): The shared grid.
        curves (NDArray): Curve values of shape `(n, m)`, all finite.
    """

    grid: CircleGrid
    curves: NDArray[np.float64]

    def __post_init__(self):
        curves = np.asarray(self.curves, dtype=np.float64)
        if curves.ndim != 2 or curves.shape[0] < 1:
            raise DomainError("A curve sample needs at least one curve as a 2D array.")
        if curves.shape[1] != self.grid.m:
            raise DomainError(
                f"Curves have {curves.shape[1]} samples but the grid has {self.grid.m}."
            )
        if not np.all(np.isfinite(curves)):
            raise DomainError("Curve values must be finite.")
        object.__setattr__(self, "curves", curves)

    @property
    def n(self) -> int:
        return self.curves.shape[0]

    @classmethod
    def from_curves(cls, curves: ArrayLike) -> "CurveSample":
        """Builds a sample on the grid implied by the number of samples per curve."""
        curves = np.atleast_2d(np.asarray(curves, dtype=np.float64))
        return cls(CircleGrid(curves.shape[1]), curves)


@dataclass(frozen=True, eq=False)
class RkhsMean:
    """
    The non-private summary `h(D)`.

    Attributes:
        coefficients (NDArray): `c_j` over the retained eigenmodes, shape `(p,)`.
        values (NDArray): `sum_j c_j b_j` on the grid, shape `(m,)`.
        phi (float): The smoothing penalty.
        basis (KernelEigenbasis): The eigenbasis the mean is expressed in.
    """

    coefficients: NDArray[np.float64]
    values: NDArray[np.float64]
    phi: float
    basis: KernelEigenbasis

    @classmethod
    def from_coefficients(
        cls, coefficients: ArrayLike, basis: KernelEigenbasis, phi: float
    ) -> "RkhsMean":
        coefficients = np.asarray(coefficients, dtype=np.float64)
        if coefficients.shape != (basis.rank,):
            raise DomainError(
                f"Expected {basis.rank} coefficients, got shape {coefficients.shape}."
            )
        return cls(coefficients, basis.reconstruct(coefficients), phi, basis)


def _check_phi(phi: float) -> None:
    if not (math.isfinite(phi) and phi > 0):
        raise DomainError(
            f"Smoothing penalty 'phi' must be positive, got {phi}; the sensitivity "
            f"bound 4 tau^2 / (n^2 phi) diverges otherwise."
        )


def rkhs_mean(sample: CurveSample, basis: KernelEigenbasis, phi: float) -> RkhsMean:
    """
    Computes the shrunk projection of the sample mean onto the retained eigenbasis.

    Each eigen-coefficient of the sample mean is multiplied by `lambda_j / (lambda_j + phi)`,
    so larger `phi` gives smoother means and a smaller sensitivity.

    Args:
        sample: The curves to average.
        basis: The kernel eigenbasis, on the same grid as `sample`.
        phi: The smoothing penalty, strictly positive.

    Returns:
        (RkhsMean): The regularized mean.

    Raises:
        DomainError: If `phi <= 0` or the sample and basis grids differ.
    """
    _check_phi(phi)
    if sample.grid != basis.grid:
        raise DomainError(
            f"Sample grid (m={sample.grid.m}) does not match basis grid (m={basis.grid.m})."
        )
    shrinkage = basis.eigenvalues / (basis.eigenvalues + phi)
    coefficients = shrinkage * basis.project(sample.curves).mean(axis=0)
    return RkhsMean.from_coefficients(coefficients, basis, phi)


def rkhs_inner(a: RkhsMean, b: RkhsMean) -> float:
    """`<a, b>_H = sum_j lambda_j^-1 c_j(a) c_j(b)`; both means must share a basis."""
    if not a.basis.is_compatible(b.basis):
        raise DomainError("RKHS inner product needs both means on the same basis.")
    return float(np.sum(a.coefficients * b.coefficients / a.basis.eigenvalues))


def rkhs_norm(mean: RkhsMean) -> float:
    return float(
        math.sqrt(np.sum(mean.coefficients**2 / mean.basis.eigenvalues))
    )


def rkhs_distance(a: RkhsMean, b: RkhsMean) -> float:
    """The RKHS norm of `a - b`, the quantity the sensitivity `Delta` bounds."""
    if not a.basis.is_compatible(b.basis):
        raise DomainError("RKHS distance needs both means on the same basis.")
    difference = a.coefficients - b.coefficients
    return float(math.sqrt(np.sum(difference**2 / a.basis.eigenvalues)))


def ambient_norm(curve: ArrayLike, grid: CircleGrid) -> float:
    """The discrete L2 norm `sqrt((1/m) sum_i f(t_i)^2)` used for the norm bound `tau`."""
    return float(math.sqrt(grid.inner_product(curve, curve)))
