"""
The mu-GDP Gaussian process mechanism `h~(D) = h(D) + sigma Z` with `sigma = Delta / mu`,
Pythagorean budget composition, the GDP to (epsilon, delta) dual, and a Monte-Carlo
verifier of the privacy loss arithmetic.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Self, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, special, stats

from .circle_kernel import KernelEigenbasis
from .errors import DomainError
from .reports import NormalityCheck, TailCheck, TradeoffCheck, VerificationReport
from .rkhs_mean import CurveSample, RkhsMean, ambient_norm, rkhs_distance, rkhs_norm
from .utils import Coordinate, make_rng

default_logger = logging.getLogger(__name__)

MIN_VERIFY_SAMPLES = 10_000
VERIFY_BATCH_SIZE = 1 << 16
TOLERANCE_STANDARD_ERRORS = 3.0


@dataclass(frozen=True)
class GdpParams:
    """
    Calibration of one release.

    Attributes:
        mu (float): The GDP budget of the release.
        delta_bound (float): The sensitivity `Delta` in RKHS norm units.
        sigma (float): The noise scale, `Delta / mu`.
    """

    mu: float
    delta_bound: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise DomainError(f"GDP budget 'mu' must be positive, got {self.mu}.")
        if not (math.isfinite(self.delta_bound) and self.delta_bound >= 0):
            raise DomainError(f"Sensitivity must be nonnegative, got {self.delta_bound}.")
        if not math.isclose(self.sigma * self.mu, self.delta_bound, rel_tol=1e-12):
            raise DomainError(
                f"sigma={self.sigma} is not calibrated to Delta/mu="
                f"{self.delta_bound / self.mu}."
            )

    def __rich_repr__(self):
        yield "mu", self.mu
        yield "delta_bound", self.delta_bound
        yield "sigma", self.sigma


@dataclass(frozen=True)
class PrivacyBudget:
    """
    Per-coordinate budgets shared by all `J` radial curves. The total budget of the
    `3J` releases is `mu_total = sqrt(J (mu_x^2 + mu_y^2 + mu_z^2))`.
    """

    mu_x: float
    mu_y: float
    mu_z: float
    J: int

    def __post_init__(self):
        for name in ("mu_x", "mu_y", "mu_z"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"'{name}' must be positive, got {value}.")
        if self.J < 1:
            raise DomainError(f"Curve count 'J' must be positive, got {self.J}.")

    @classmethod
    def from_coordinates(cls, budgets: Mapping[Coordinate | str, float], J: int) -> Self:
        """
        Example:
            ```python
            budget = PrivacyBudget.from_coordinates({"x": 0.2, "y": 0.2, "z": 0.55}, J=23)
            budget.mu_total  # 2.9661...
            ```
        """
        values = {Coordinate(key): value for key, value in budgets.items()}
        missing = set(Coordinate) - set(values)
        if missing:
            raise DomainError(f"Missing budgets for {sorted(missing)}.")
        return cls(values[Coordinate.x], values[Coordinate.y], values[Coordinate.z], J)

    @property
    def mu_total(self) -> float:
        return compose(self.per_release())

    def mu_for(self, coordinate: Coordinate | str) -> float:
        return getattr(self, f"mu_{Coordinate(coordinate)}")

    def per_release(self) -> list[float]:
        """Budgets of all releases, curve by curve, in `x, y, z` order."""
        return [self.mu_for(w) for _ in range(self.J) for w in Coordinate]

    def __rich_repr__(self):
        yield "mu_x", self.mu_x
        yield "mu_y", self.mu_y
        yield "mu_z", self.mu_z
        yield "J", self.J
        yield "mu_total", self.mu_total


@dataclass(frozen=True, eq=False)
class SanitizedCurve:
    """
    A released curve `h~(D)` on the grid, with the calibration and seed that produced it.
    """

    values: NDArray[np.float64]
    params: GdpParams
    seed: int

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise DomainError("Sanitized values must be finite.")


def calibrate_sigma(delta_bound: float, mu: float) -> GdpParams:
    """
    Calibrates the noise scale at equality, `sigma = Delta / mu`.

    Example:
        ```python
        delta = sensitivity_bound(tau=1, n=1000, phi=0.005)  # 0.0282843
        calibrate_sigma(delta, mu=0.55).sigma  # 0.0514260
        ```

    Raises:
        DomainError: If `mu <= 0` or `delta_bound < 0`.
    """
    if not (math.isfinite(mu) and mu > 0):
        raise DomainError(f"GDP budget 'mu' must be positive, got {mu}.")
    return GdpParams(mu=mu, delta_bound=delta_bound, sigma=delta_bound / mu)


def sensitivity_bound(tau: float, n: int, phi: float) -> float:
    """Returns `Delta = 2 tau / (n sqrt(phi))`, from `Delta^2 <= 4 tau^2 / (n^2 phi)`."""
    if not (math.isfinite(phi) and phi > 0):
        raise DomainError(f"Smoothing penalty 'phi' must be positive, got {phi}.")
    if n < 1:
        raise DomainError(f"Sample size 'n' must be positive, got {n}.")
    if not (math.isfinite(tau) and tau >= 0):
        raise DomainError(f"Norm bound 'tau' must be nonnegative, got {tau}.")
    return 2 * tau / (n * math.sqrt(phi))


def tau_from_sample(sample: CurveSample | ArrayLike) -> float:
    """
    The data-driven norm bound `tau = max_i ||f_i||`. Releases that use it must be
    reported with `SensitivityProvenance.data_driven`.

    Raises:
        DomainError: If the sample is empty.
    """
    if isinstance(sample, CurveSample):
        curves, grid = sample.curves, sample.grid
    else:
        curves = np.asarray(sample, dtype=np.float64)
        if curves.ndim != 2 or curves.shape[0] == 0:
            raise DomainError("Cannot compute tau of an empty sample.")
        grid = CurveSample.from_curves(curves).grid
    return max(ambient_norm(curve, grid) for curve in curves)


def _noise_coefficients(
    basis: KernelEigenbasis, rng: np.random.Generator, size: Optional[int]
) -> NDArray[np.float64]:
    shape = (basis.rank,) if size is None else (size, basis.rank)
    return rng.standard_normal(shape) * np.sqrt(basis.eigenvalues)


def sample_gp_noise(
    basis: KernelEigenbasis, seed: int, size: Optional[int] = None
) -> NDArray[np.float64]:
    """
    Draws `Z = sum_j sqrt(lambda_j) xi_j b_j` with independent standard normal `xi_j`.
    The covariance of `Z` on the grid is the kernel matrix `K`.

    Args:
        basis: The kernel eigenbasis.
        seed: Seed of the counter-based generator.
        size: Number of independent draws; `None` returns a single curve of shape `(m,)`,
            an integer returns shape `(size, m)`.
    """
    return basis.reconstruct(_noise_coefficients(basis, make_rng(seed), size))


def sanitize(
    mean: RkhsMean,
    params: GdpParams,
    seed: int,
    basis: Optional[KernelEigenbasis] = None,
) -> SanitizedCurve:
    """
    Releases `h(D) + sigma Z`. Summary and noise share the eigenbasis, so the output lies in
    the span of the retained eigenvectors.

    Args:
        mean: The non-private RKHS mean.
        params: The calibrated parameters.
        seed: Seed of the noise draw; identical inputs and seed give identical output.
        basis: The noise basis. Defaults to the basis of `mean`.

    Raises:
        DomainError: If `basis` is not the basis of `mean`.
    """
    basis = basis or mean.basis
    if not basis.is_compatible(mean.basis):
        raise DomainError("The noise basis must be the basis of the mean.")
    values = mean.values + params.sigma * sample_gp_noise(basis, seed)
    return SanitizedCurve(values=values, params=params, seed=seed)


def compose(budgets: Iterable[float]) -> float:
    """
    Composes GDP budgets, `sqrt(sum_i mu_i^2)`.

    Raises:
        DomainError: If `budgets` is empty or contains a non-positive value.
    """
    budgets = list(budgets)
    if not budgets:
        raise DomainError("Cannot compose an empty list of budgets.")
    if any(not (math.isfinite(mu) and mu > 0) for mu in budgets):
        raise DomainError("All composed budgets must be positive.")
    return math.sqrt(math.fsum(mu * mu for mu in budgets))


def gdp_to_dp_delta(mu: float, epsilon: float) -> float:
    """
    The smallest `delta` for which a `mu`-GDP mechanism is `(epsilon, delta)`-DP,
    `Phi(-epsilon/mu + mu/2) - exp(epsilon) Phi(-epsilon/mu - mu/2)`.

    The second term is evaluated in log space so that large `epsilon` neither overflows
    nor cancels.
    """
    if not (mu > 0):
        raise DomainError(f"'mu' must be positive, got {mu}.")
    if not (epsilon >= 0):
        raise DomainError(f"'epsilon' must be nonnegative, got {epsilon}.")
    first = special.ndtr(-epsilon / mu + mu / 2)
    second = math.exp(epsilon + special.log_ndtr(-epsilon / mu - mu / 2))
    return float(min(max(first - second, 0.0), math.nextafter(1.0, 0.0)))


def dp_epsilon_for_delta(mu: float, delta: float) -> float:
    """
    Inverts `gdp_to_dp_delta` in `epsilon` for a target `delta` in `(0, 1)`.
    """
    if not (0 < delta < 1):
        raise DomainError(f"'delta' must lie in (0, 1), got {delta}.")
    if gdp_to_dp_delta(mu, 0.0) <= delta:
        return 0.0
    upper = max(1.0, mu)
    while gdp_to_dp_delta(mu, upper) > delta:
        upper *= 2
    return float(
        optimize.brentq(lambda eps: gdp_to_dp_delta(mu, eps) - delta, 0.0, upper, xtol=1e-12)
    )


def gaussian_tradeoff(mu: float, alpha: float) -> float:
    """
    `G_mu(alpha) = Phi(Phi^-1(1 - alpha) - mu)`: the smallest type II error of any test
    between `N(0, 1)` and `N(mu, 1)` at type I error `alpha`.
    """
    if not (mu >= 0):
        raise DomainError(f"'mu' must be nonnegative, got {mu}.")
    if not (0 <= alpha <= 1):
        raise DomainError(f"'alpha' must lie in [0, 1], got {alpha}.")
    return float(special.ndtr(special.ndtri(1 - alpha) - mu))


def approx_dp_sigma(delta_bound: float, epsilon: float, delta: float) -> float:
    """
    Noise scale of the `(epsilon, delta)`-DP functional Gaussian mechanism,
    `sigma = Delta sqrt(2 log(2/delta)) / epsilon`. That calibration only holds for
    `epsilon <= 1`; the GDP calibration `calibrate_sigma` has no such restriction.
    """
    if not (0 < epsilon <= 1):
        raise DomainError(f"'epsilon' must lie in (0, 1], got {epsilon}.")
    if not (0 < delta < 1):
        raise DomainError(f"'delta' must lie in (0, 1), got {delta}.")
    if delta_bound < 0:
        raise DomainError(f"Sensitivity must be nonnegative, got {delta_bound}.")
    return delta_bound * math.sqrt(2 * math.log(2 / delta)) / epsilon


def _functional(
    direction: NDArray[np.float64], outputs: NDArray[np.float64], basis: KernelEigenbasis
) -> NDArray[np.float64]:
    # <direction, y>_H for every row y of outputs, evaluated on grid values.
    return basis.project(outputs) @ (direction / basis.eigenvalues)


def verify_privacy_loss(
    mean_d: RkhsMean,
    mean_d_prime: RkhsMean,
    params: GdpParams,
    n_samples: int,
    seed: int,
    epsilons: Sequence[float] = (0.25, 0.5, 1.0, 2.0),
    alpha: float = 0.05,
    workers: int = 1,
    logger: Optional[logging.Logger] = None,
) -> VerificationReport:
    """
    Monte-Carlo check of the privacy loss of `sanitize` for one pair of adjacent datasets.

    Draws `n_samples` releases under `D` and under `D'` in fixed-size batches (batch `b`
    uses the streams `(seed, b, 0)` and `(seed, b, 1)`, so the result does not depend on
    `workers`) and evaluates on every release the linear functional
    `T(y) = <h(D) - h(D'), y>_H`. From it the report compares

    - the noise part of `T` with `N(0, ||h(D) - h(D')||_H^2)` (Kolmogorov-Smirnov),
    - the tails `P(PL >= eps)` and `P(PL <= -eps)` with
      `Phi(-sigma eps / d + d / (2 sigma))` and `Phi(-sigma eps / d - d / (2 sigma))`, where
      `d` is the realized distance, and with the calibrated bound at `mu`,
    - the type II error of the likelihood ratio test at level `alpha` with `G_mu(alpha)`.

    Args:
        mean_d: The mean of `D`.
        mean_d_prime: The mean of an adjacent dataset `D'`, on the same basis.
        params: The calibration used to release.
        n_samples: Number of releases per dataset, at least `10**4`.
        seed: Master seed of the Monte-Carlo draws.
        epsilons: Privacy loss thresholds to check.
        alpha: Type I error level of the trade-off check.
        workers: Number of threads for the batches.
        logger: Logger for progress messages.

    Raises:
        DomainError: On a basis mismatch, too few samples, or a positive distance with zero noise.
    """
    logger = logger or default_logger
    if not mean_d.basis.is_compatible(mean_d_prime.basis):
        raise DomainError("Both means must be expressed in the same eigenbasis.")
    if n_samples < MIN_VERIFY_SAMPLES:
        raise DomainError(
            f"At least {MIN_VERIFY_SAMPLES} samples are needed, got {n_samples}."
        )
    basis, sigma = mean_d.basis, params.sigma
    direction = mean_d.coefficients - mean_d_prime.coefficients
    distance = rkhs_distance(mean_d, mean_d_prime)
    if distance > 0 and sigma == 0:
        raise DomainError("Distinct means released without noise are not private.")
    offset = (rkhs_norm(mean_d) ** 2 - rkhs_norm(mean_d_prime) ** 2) / 2
    logger.info(
        f"Verifying privacy loss with {n_samples} samples: distance={distance:.6g}, "
        f"sigma={sigma:.6g}, mu={params.mu:.6g}."
    )

    def run_batch(index: int) -> tuple[NDArray, NDArray, NDArray]:
        size = min(VERIFY_BATCH_SIZE, n_samples - index * VERIFY_BATCH_SIZE)
        noise = basis.reconstruct(
            _noise_coefficients(basis, make_rng(seed, index, 0), size)
        )
        noise_prime = basis.reconstruct(
            _noise_coefficients(basis, make_rng(seed, index, 1), size)
        )
        released = mean_d.values + sigma * noise
        released_prime = mean_d_prime.values + sigma * noise_prime
        return (
            _functional(direction, noise, basis),
            _functional(direction, released, basis),
            _functional(direction, released_prime, basis),
        )

    n_batches = -(-n_samples // VERIFY_BATCH_SIZE)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        batches = list(pool.map(run_batch, range(n_batches)))
    noise_stat = np.concatenate([batch[0] for batch in batches])
    stat_d = np.concatenate([batch[1] for batch in batches])
    stat_d_prime = np.concatenate([batch[2] for batch in batches])

    if distance > 0:
        ks = stats.kstest(noise_stat / distance, "norm")
        normality = NormalityCheck(
            expected_std=distance,
            empirical_mean=float(noise_stat.mean()),
            empirical_std=float(noise_stat.std()),
            ks_statistic=float(ks.statistic),
            ks_pvalue=float(ks.pvalue),
        )
        privacy_loss = (stat_d - offset) / sigma**2
    else:
        normality = NormalityCheck(
            expected_std=0.0,
            empirical_mean=float(noise_stat.mean()),
            empirical_std=float(noise_stat.std()),
        )
        privacy_loss = np.zeros(n_samples)

    tails = [
        _tail_check(privacy_loss, epsilon, distance, params)
        for epsilon in epsilons
    ]
    tradeoff = _tradeoff_check(stat_d, stat_d_prime, alpha, distance, params)
    report = VerificationReport(
        mu=params.mu,
        sigma=sigma,
        delta_bound=params.delta_bound,
        realized_distance=distance,
        realized_mu=distance / sigma if sigma > 0 else 0.0,
        n_samples=n_samples,
        seed=seed,
        sensitivity_within_bound=distance <= params.delta_bound,
        normality=normality,
        tails=tails,
        tradeoff=tradeoff,
    )
    if report.has_violation:
        logger.warning("Privacy loss verification found a violation.")
    return report


def _tail_check(
    privacy_loss: NDArray[np.float64], epsilon: float, distance: float, params: GdpParams
) -> TailCheck:
    n = len(privacy_loss)
    sigma = params.sigma
    if distance > 0:
        predicted_upper = float(
            special.ndtr(-sigma * epsilon / distance + distance / (2 * sigma))
        )
        predicted_lower = float(
            special.ndtr(-sigma * epsilon / distance - distance / (2 * sigma))
        )
        predicted_delta = gdp_to_dp_delta(distance / sigma, epsilon)
    else:
        predicted_upper = predicted_lower = 1.0 if epsilon == 0 else 0.0
        predicted_delta = 0.0
    mu = params.mu
    bound_upper = float(special.ndtr(-epsilon / mu + mu / 2))
    empirical_upper = float(np.mean(privacy_loss >= epsilon))
    empirical_lower = float(np.mean(privacy_loss <= -epsilon))
    standard_error = math.sqrt(predicted_upper * (1 - predicted_upper) / n)
    bound_error = math.sqrt(bound_upper * (1 - bound_upper) / n)
    # One extra count absorbs the discreteness of proportions near 0 and 1.
    slack = TOLERANCE_STANDARD_ERRORS * standard_error + 1 / n
    return TailCheck(
        epsilon=epsilon,
        empirical_upper=empirical_upper,
        predicted_upper=predicted_upper,
        bound_upper=bound_upper,
        empirical_lower=empirical_lower,
        predicted_lower=predicted_lower,
        empirical_delta=empirical_upper - math.exp(epsilon) * empirical_lower,
        predicted_delta=predicted_delta,
        bound_delta=gdp_to_dp_delta(mu, epsilon),
        standard_error=standard_error,
        within_tolerance=abs(empirical_upper - predicted_upper) <= slack,
        violation=empirical_upper
        > bound_upper + TOLERANCE_STANDARD_ERRORS * bound_error + 1 / n,
    )


def _tradeoff_check(
    stat_d: NDArray[np.float64],
    stat_d_prime: NDArray[np.float64],
    alpha: float,
    distance: float,
    params: GdpParams,
) -> TradeoffCheck:
    # The likelihood ratio is monotone in T, and T is larger under D: reject D for small T.
    n = len(stat_d)
    bound_type2 = gaussian_tradeoff(params.mu, alpha)
    if distance > 0:
        threshold = np.quantile(stat_d, alpha)
        empirical_type2 = float(np.mean(stat_d_prime >= threshold))
        realized_type2 = gaussian_tradeoff(distance / params.sigma, alpha)
    else:
        # Identical output distributions: only randomized tests exist, beta = 1 - alpha.
        empirical_type2 = realized_type2 = 1 - alpha
    standard_error = math.sqrt(bound_type2 * (1 - bound_type2) / n)
    return TradeoffCheck(
        alpha=alpha,
        empirical_type2=empirical_type2,
        realized_type2=realized_type2,
        bound_type2=bound_type2,
        standard_error=standard_error,
        passes=empirical_type2
        >= bound_type2 - TOLERANCE_STANDARD_ERRORS * standard_error,
    )
