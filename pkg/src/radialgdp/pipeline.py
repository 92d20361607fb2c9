"""
The end-to-end experiment, one function per stage:

    generate -> preprocess -> extract -> sanitize -> baseline -> evaluate -> verify

Every stage reads the artifacts of the previous ones from a `Workspace` and writes its own
into a fresh stage directory. All randomness comes from subseeds of `config.seed`, and
work spread over `config.workers` threads is collected in a fixed order, so the artifacts
of a run depend on the dataset, the config and the seed only.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, TypeVar

import numpy as np
from numpy.typing import NDArray

from .baseline import pointwise_mean, pointwise_sanitize, pointwise_sensitivity, split_budget
from .circle_kernel import (
    CircleGrid,
    KernelEigenbasis,
    PeriodicKernelParams,
    load_or_build_eigenbasis,
)
from .config import PipelineConfig, make_config
from .dirs import eigenbasis_cache_dir, workdir_candidates
from .errors import ArtifactNotFoundError, DataError
from .evaluation import align_scale, mse_pointwise
from .formats import (
    read_curve_set_csv,
    read_point_cloud_csv,
    read_surface_csv,
    write_curve_set_csv,
    write_curve_set_obj,
    write_point_cloud_csv,
    write_surface_csv,
    write_surface_obj,
)
from .gdp import (
    calibrate_sigma,
    sanitize,
    sensitivity_bound,
    tau_from_sample,
    verify_privacy_loss,
)
from .reports import (
    EvaluationRecord,
    EvaluationReport,
    PointwiseReleaseReport,
    ReleaseRecord,
    ReleaseReport,
    VerificationSuite,
    write_report,
)
from .rkhs_mean import CurveSample, rkhs_mean
from .surface import (
    DiskSurface,
    PointCloud,
    RadialCurveSet,
    SyntheticFaceConfig,
    curves_to_point_cloud,
    extract_radial_curves,
    generate_synthetic_dataset,
    generalized_procrustes,
    normalize,
)
from .utils import (
    Coordinate,
    Reference,
    SensitivityProvenance,
    Stage,
    Stream,
    derive_seed,
    make_rng,
)
from .validators import DatasetValidator, WorkdirValidator
from .workspace import Workspace

default_logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

SURFACE_PATTERN = "surface_*.csv"
CURVES_PATTERN = "curves_*.csv"
PRIVATE_CURVES = "private_mean_curves.csv"
PRIVATE_CLOUD = "private_mean_cloud.csv"
PRIVATE_OBJ = "private_mean.obj"
MEAN_SURFACE_OBJ = "mean_surface.obj"
RKHS_CURVES = "rkhs_mean_curves.csv"
RKHS_CLOUD = "rkhs_mean_cloud.csv"
RELEASE_REPORT = "release_report.json"
POINTWISE_MEAN_CLOUD = "pointwise_mean_cloud.csv"
EVALUATION_REPORT = "evaluation_report.json"
VERIFICATION_REPORT = "verification_report.json"
FUNCTIONAL_ID = "functional"
POINTWISE_REFERENCE_ID = "pointwise_mean"
RKHS_REFERENCE_ID = "rkhs_mean"
VERIFY_CURVE_MODES = 4


def baseline_name(mu_total: float) -> str:
    return f"pointwise_mu{mu_total:g}"


def _indexed_name(prefix: str, index: int) -> str:
    return f"{prefix}_{index:04d}.csv"


def _ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int) -> list[R]:
    # Executor.map yields in input order, so the output never depends on `workers`.
    items = list(items)
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def open_workspace(config: PipelineConfig, logger: Optional[logging.Logger] = None) -> Workspace:
    """
    Validates the configured working directory, falling back to the platform data
    directory when it is not writable.

    Raises:
        WorkdirValidationError: If no candidate directory is writable.
    """
    logger = logger or default_logger
    root = WorkdirValidator(workdir_candidates(config.workdir), err_logger=logger).validate()
    if root.resolve() != Path(config.workdir).expanduser().resolve():
        logger.warning(f"Working directory {config.workdir} is not writable, using {root}.")
    return Workspace(root, err_logger=logger)


def load_basis(config: PipelineConfig) -> KernelEigenbasis:
    return load_or_build_eigenbasis(
        CircleGrid(config.m),
        PeriodicKernelParams(config.rho, config.alpha),
        cache_dir=eigenbasis_cache_dir() if config.cache_eigenbasis else None,
    )


def _read_surfaces(paths: list[Path], workers: int) -> list[DiskSurface]:
    return _ordered_map(read_surface_csv, paths, workers)


def run_generate(
    config: PipelineConfig,
    workspace: Optional[Workspace] = None,
    logger: Optional[logging.Logger] = None,
) -> list[Path]:
    """Writes `config.n_surfaces` synthetic faces into the `dataset` stage."""
    logger = logger or default_logger
    workspace = workspace or open_workspace(config, logger)
    generator = SyntheticFaceConfig(
        n_radii=config.n_radii,
        m=config.m,
        perturbation_amplitude=config.perturbation_amplitude,
        rotation_jitter_deg=config.rotation_jitter_deg,
        scale_jitter=config.scale_jitter,
    )
    dataset = generate_synthetic_dataset(
        config.n_surfaces, generator, derive_seed(config.seed, Stream.dataset)
    )
    directory = workspace.prepare(Stage.dataset)
    paths = [directory / _indexed_name("surface", i) for i in range(config.n_surfaces)]
    for surface, path in zip(dataset.surfaces, paths):
        write_surface_csv(surface, path)
    logger.info(f"Generated {len(paths)} synthetic surfaces in {directory}.")
    return paths


def run_preprocess(
    config: PipelineConfig,
    workspace: Optional[Workspace] = None,
    logger: Optional[logging.Logger] = None,
) -> list[Path]:
    """
    Normalizes every input surface to unit area and zero centroid, rotates all of them
    onto a common template and writes the result into the `preprocessed` stage, together
    with the non-private mean surface as an OBJ file for inspection.

    Raises:
        ArtifactNotFoundError: If there are no input surfaces.
        DataError: If an input file is malformed.
        DatasetValidationError: If the surfaces are not sampled on a common grid.
    """
    logger = logger or default_logger
    workspace = workspace or open_workspace(config, logger)
    if config.input_dir is not None:
        sources = sorted(Path(config.input_dir).glob("*.csv"))
        if not sources:
            raise ArtifactNotFoundError(
                f"No surface CSV files in {config.input_dir}.", path=Path(config.input_dir)
            )
    else:
        sources = workspace.artifacts(Stage.dataset, SURFACE_PATTERN)
    surfaces = list(DatasetValidator(_read_surfaces(sources, config.workers)).validate())
    normalized = _ordered_map(normalize, surfaces, config.workers)
    aligned, _ = generalized_procrustes(
        normalized, iterations=config.procrustes_iterations, logger=logger
    )
    directory = workspace.prepare(Stage.preprocessed)
    paths = [directory / _indexed_name("surface", i) for i in range(len(aligned))]
    for surface, path in zip(aligned, paths):
        write_surface_csv(surface, path)
    mean_points = np.mean([surface.points for surface in aligned], axis=0)
    write_surface_obj(aligned[0].with_points(mean_points), directory / MEAN_SURFACE_OBJ)
    logger.info(f"Normalized and aligned {len(paths)} surfaces.")
    return paths


def run_extract(
    config: PipelineConfig,
    workspace: Optional[Workspace] = None,
    logger: Optional[logging.Logger] = None,
) -> list[Path]:
    """Cuts `config.J` radial curves out of every preprocessed surface."""
    logger = logger or default_logger
    workspace = workspace or open_workspace(config, logger)
    surfaces = _read_surfaces(
        workspace.artifacts(Stage.preprocessed, SURFACE_PATTERN), config.workers
    )
    curve_sets = _ordered_map(
        lambda surface: extract_radial_curves(surface, config.J), surfaces, config.workers
    )
    directory = workspace.prepare(Stage.curves)
    paths = [directory / _indexed_name("curves", i) for i in range(len(curve_sets))]
    for curve_set, path in zip(curve_sets, paths):
        write_curve_set_csv(curve_set, path)
    logger.info(f"Extracted {config.J} radial curves from {len(paths)} surfaces.")
    return paths


def _stack_curve_sets(curve_sets: list[RadialCurveSet]) -> NDArray[np.float64]:
    first = curve_sets[0]
    for index, curve_set in enumerate(curve_sets[1:], start=1):
        if curve_set.grid != first.grid or not np.array_equal(
            curve_set.radii_selected, first.radii_selected
        ):
            raise DataError(
                f"Curve set {index} does not match the radii and grid of curve set 0."
            )
    return np.stack([curve_set.curves for curve_set in curve_sets])


def run_sanitize_pipeline(
    config: PipelineConfig,
    workspace: Optional[Workspace] = None,
    basis: Optional[KernelEigenbasis] = None,
    logger: Optional[logging.Logger] = None,
) -> ReleaseReport:
    """
    Releases the private mean of the dataset of radial curves.

    For every curve `j` and coordinate `w` the sample `{f_ijw}` is averaged in the RKHS
    with `phi_w`, its norm bound `tau_w` is taken from the data (or the config when the
    sensitivity is supplied), and the mean is sanitized with `sigma = Delta / mu_w` from
    its own subseed. The private mean is written as a curve set, an OBJ file and a
    `J * (m + 1)` point cloud, next to the non-private mean and the release report.
    """
    logger = logger or default_logger
    workspace = workspace or open_workspace(config, logger)
    curve_sets = [
        read_curve_set_csv(path)
        for path in workspace.artifacts(Stage.curves, CURVES_PATTERN)
    ]
    stacked = _stack_curve_sets(curve_sets)
    n, J = stacked.shape[0], stacked.shape[1]
    basis = basis or load_basis(config)
    if basis.grid.m != curve_sets[0].grid.m:
        raise DataError(
            f"Curves have {curve_sets[0].grid.m} samples, the configuration m={config.m}."
        )
    budget = config.budget
    if J != budget.J:
        raise DataError(f"Found {J} curves per surface, configured J={budget.J}.")
    provenance = config.sensitivity_mode

    def release(key: tuple[int, Coordinate]):
        j, w = key
        sample = CurveSample(basis.grid, stacked[:, j, w.index, :])
        tau = (
            tau_from_sample(sample)
            if provenance is SensitivityProvenance.data_driven
            else config.tau_for(w)
        )
        phi, mu = config.phi_for(w), budget.mu_for(w)
        params = calibrate_sigma(sensitivity_bound(tau, n, phi), mu)
        mean = rkhs_mean(sample, basis, phi)
        seed = derive_seed(config.seed, Stream.release, j, w.index)
        sanitized = sanitize(mean, params, seed)
        record = ReleaseRecord(
            curve_index=j,
            coordinate=w,
            mu=mu,
            phi=phi,
            tau=tau,
            delta_bound=params.delta_bound,
            sigma=params.sigma,
            seed=seed,
            sensitivity_provenance=provenance,
        )
        return mean.values, sanitized.values, record

    keys = [(j, w) for j in range(J) for w in Coordinate]
    results = _ordered_map(release, keys, config.workers)
    means = np.empty((J, 3, basis.grid.m))
    private = np.empty((J, 3, basis.grid.m))
    for (j, w), (mean_values, private_values, _) in zip(keys, results):
        means[j, w.index], private[j, w.index] = mean_values, private_values

    radii = curve_sets[0].radii_selected
    private_set = RadialCurveSet(radii, private, basis.grid)
    mean_set = RadialCurveSet(radii, means, basis.grid)
    directory = workspace.prepare(Stage.release)
    write_curve_set_csv(private_set, directory / PRIVATE_CURVES)
    write_curve_set_obj(private_set, directory / PRIVATE_OBJ)
    write_point_cloud_csv(curves_to_point_cloud(private_set), directory / PRIVATE_CLOUD)
    write_curve_set_csv(mean_set, directory / RKHS_CURVES)
    write_point_cloud_csv(curves_to_point_cloud(mean_set), directory / RKHS_CLOUD)

    report = ReleaseReport(
        n=n,
        J=J,
        m=basis.grid.m,
        rho=config.rho,
        alpha=config.alpha,
        mu_x=budget.mu_x,
        mu_y=budget.mu_y,
        mu_z=budget.mu_z,
        mu_total=budget.mu_total,
        master_seed=config.seed,
        sensitivity_provenance=provenance,
        releases=[record for _, _, record in results],
    )
    write_report(report, directory / RELEASE_REPORT)
    if provenance is SensitivityProvenance.data_driven:
        logger.warning(
            "Norm bounds were computed from the confidential data; the release is not "
            "formally private."
        )
    logger.info(f"Released {len(keys)} curves with mu_total={report.mu_total:.4f}.")
    return report


def _preprocessed_clouds(config: PipelineConfig, workspace: Workspace) -> list[PointCloud]:
    surfaces = _read_surfaces(
        workspace.artifacts(Stage.preprocessed, SURFACE_PATTERN), config.workers
    )
    return [surface.to_point_cloud() for surface in surfaces]


def run_baseline(
    config: PipelineConfig,
    workspace: Optional[Workspace] = None,
    logger: Optional[logging.Logger] = None,
) -> list[PointwiseReleaseReport]:
    """
    Releases the point-wise mean of the preprocessed surfaces once per total budget in
    `config.baseline_mu_totals`, each with the budget split evenly over all `3P` entries.
    """
    logger = logger or default_logger
    workspace = workspace or open_workspace(config, logger)
    clouds = _preprocessed_clouds(config, workspace)
    mean = pointwise_mean(clouds)
    sensitivity = pointwise_sensitivity(clouds)
    directory = workspace.prepare(Stage.baseline)
    write_point_cloud_csv(mean, directory / POINTWISE_MEAN_CLOUD)
    reports = []
    for index, mu_total in enumerate(config.baseline_mu_totals):
        name = baseline_name(mu_total)
        mu_p = split_budget(mu_total, mean.P)
        seed = derive_seed(config.seed, Stream.baseline, index)
        write_point_cloud_csv(
            pointwise_sanitize(mean, sensitivity, mu_p, seed), directory / f"{name}_cloud.csv"
        )
        scales = sensitivity.noise_scales(mu_p)
        scale_file = f"{name}_noise_scales.csv"
        np.savetxt(
            directory / scale_file,
            scales,
            fmt="%.17g",
            delimiter=",",
            header=",".join(Coordinate),
            comments="",
        )
        report = PointwiseReleaseReport(
            n=len(clouds),
            n_points=mean.P,
            mu_total=mu_total,
            mu_p=mu_p,
            n_releases=3 * mean.P,
            seed=seed,
            sensitivity_provenance=SensitivityProvenance.data_driven,
            noise_scale_file=scale_file,
            noise_scale_min=float(scales.min()),
            noise_scale_max=float(scales.max()),
        )
        write_report(report, directory / f"{name}_report.json")
        reports.append(report)
        logger.info(f"Point-wise baseline at mu_total={mu_total:g}: mu_p={mu_p:.6g}.")
    return reports


def _references(
    config: PipelineConfig, workspace: Workspace
) -> list[tuple[str, PointCloud]]:
    references = []
    if config.reference in (Reference.pointwise, Reference.both):
        references.append(
            (POINTWISE_REFERENCE_ID, pointwise_mean(_preprocessed_clouds(config, workspace)))
        )
    if config.reference in (Reference.rkhs, Reference.both):
        references.append(
            (
                RKHS_REFERENCE_ID,
                read_point_cloud_csv(workspace.require(Stage.release, RKHS_CLOUD)),
            )
        )
    return references


def run_evaluate(
    config: PipelineConfig,
    workspace: Optional[Workspace] = None,
    logger: Optional[logging.Logger] = None,
) -> EvaluationReport:
    """
    Scores the private estimates against the non-private references. The functional
    release is compared by nearest-point MSE after scale alignment, the point-wise
    baselines by point-wise MSE against the point-wise mean.

    Raises:
        ArtifactNotFoundError: If an estimate or reference has not been produced yet.
    """
    logger = logger or default_logger
    workspace = workspace or open_workspace(config, logger)
    release = read_point_cloud_csv(workspace.require(Stage.release, PRIVATE_CLOUD))
    mu_total = config.budget.mu_total
    baselines = [
        (
            baseline_name(mu),
            mu,
            read_point_cloud_csv(
                workspace.require(Stage.baseline, f"{baseline_name(mu)}_cloud.csv")
            ),
        )
        for mu in config.baseline_mu_totals
    ]
    records = []
    for reference_id, reference in _references(config, workspace):
        alignment = align_scale(reference, release, logger=logger)
        records.append(
            EvaluationRecord(
                metric="mse_nearest",
                reference_id=reference_id,
                estimate_id=FUNCTIONAL_ID,
                value=alignment.objective,
                scale_a=alignment.a,
                iterations=alignment.iterations,
                mu_total=mu_total,
            )
        )
        if reference_id != POINTWISE_REFERENCE_ID:
            continue
        for name, mu, estimate in baselines:
            records.append(
                EvaluationRecord(
                    metric="mse_pointwise",
                    reference_id=reference_id,
                    estimate_id=name,
                    value=mse_pointwise(reference, estimate),
                    mu_total=mu,
                )
            )
    report = EvaluationReport(records=records)
    directory = workspace.prepare(Stage.evaluation)
    write_report(report, directory / EVALUATION_REPORT)
    for label, value in report.render_table():
        logger.info(f"{label}: {value} (E{report.scale_exponent:03d})")
    return report


def random_bounded_curves(
    rng: np.random.Generator, n: int, grid: CircleGrid, tau: float
) -> NDArray[np.float64]:
    """
    `n` smooth random curves (low-order trigonometric polynomials), each rescaled to an
    ambient norm drawn uniformly from `[tau / 2, tau]`.
    """
    t = 2 * np.pi * grid.points
    frequencies = np.arange(VERIFY_CURVE_MODES + 1)
    basis = np.concatenate(
        [np.cos(np.outer(frequencies, t)), np.sin(np.outer(frequencies[1:], t))]
    )
    curves = rng.standard_normal((n, len(basis))) @ basis
    norms = np.sqrt(np.mean(curves**2, axis=1))
    targets = tau * rng.uniform(0.5, 1.0, size=n)
    return curves * (targets / norms)[:, None]


def run_verify(
    config: PipelineConfig,
    workspace: Optional[Workspace] = None,
    basis: Optional[KernelEigenbasis] = None,
    logger: Optional[logging.Logger] = None,
) -> VerificationSuite:
    """
    Checks the privacy loss of the functional mechanism by simulation on
    `config.verify_pairs` synthetic adjacent datasets of `config.verify_n` curves with
    norm at most `config.verify_tau`; the datasets of a pair differ in their first curve.
    """
    logger = logger or default_logger
    workspace = workspace or open_workspace(config, logger)
    basis = basis or load_basis(config)
    delta_bound = sensitivity_bound(config.verify_tau, config.verify_n, config.verify_phi)
    params = calibrate_sigma(delta_bound, config.verify_mu)
    pairs = []
    for pair in range(config.verify_pairs):
        rng = make_rng(config.seed, Stream.verification, pair, 0)
        curves = random_bounded_curves(rng, config.verify_n + 1, basis.grid, config.verify_tau)
        neighbour = curves[1:].copy()
        neighbour[0] = curves[0]
        mean_d = rkhs_mean(CurveSample(basis.grid, curves[1:]), basis, config.verify_phi)
        mean_d_prime = rkhs_mean(CurveSample(basis.grid, neighbour), basis, config.verify_phi)
        pairs.append(
            verify_privacy_loss(
                mean_d,
                mean_d_prime,
                params,
                n_samples=config.verify_samples,
                seed=derive_seed(config.seed, Stream.verification, pair, 1),
                epsilons=config.verify_epsilons,
                alpha=config.verify_alpha,
                workers=config.workers,
                logger=logger,
            )
        )
    suite = VerificationSuite(
        n=config.verify_n,
        tau=config.verify_tau,
        phi=config.verify_phi,
        m=basis.grid.m,
        pairs=pairs,
    )
    directory = workspace.prepare(Stage.verification)
    write_report(suite, directory / VERIFICATION_REPORT)
    violations = sum(report.has_violation for report in pairs)
    logger.info(f"Verified {len(pairs)} adjacent pairs, {violations} with a violation.")
    return suite


@dataclass(frozen=True)
class DemoResult:
    release: ReleaseReport
    baselines: list[PointwiseReleaseReport]
    evaluation: EvaluationReport
    verification: VerificationSuite


def run_demo(
    config: PipelineConfig, logger: Optional[logging.Logger] = None
) -> DemoResult:
    """Runs every stage on a freshly generated synthetic dataset."""
    logger = logger or default_logger
    workspace = open_workspace(config, logger)
    demo_config = make_config(**{**config.model_dump(), "input_dir": None})
    basis = load_basis(demo_config)
    run_generate(demo_config, workspace, logger)
    run_preprocess(demo_config, workspace, logger)
    run_extract(demo_config, workspace, logger)
    release = run_sanitize_pipeline(demo_config, workspace, basis, logger)
    baselines = run_baseline(demo_config, workspace, logger)
    evaluation = run_evaluate(demo_config, workspace, logger)
    verification = run_verify(demo_config, workspace, basis, logger)
    return DemoResult(release, baselines, evaluation, verification)
