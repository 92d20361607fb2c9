from .baseline import (
    PointwiseSensitivity,
    pointwise_mean,
    pointwise_sanitize,
    pointwise_sensitivity,
    split_budget,
)
from .circle_kernel import (
    CircleGrid,
    KernelEigenbasis,
    PeriodicKernelParams,
    build_eigenbasis,
    build_kernel_matrix,
    circle_distance,
    eigendecompose,
    kernel_eval,
    load_or_build_eigenbasis,
    wrap,
)
from .config import PipelineConfig, dump_config, load_config
from .errors import (
    AlignmentError,
    ArtifactNotFoundError,
    ConfigError,
    DataError,
    DomainError,
    InvariantError,
    NumericalError,
    RadialGdpError,
)
from .evaluation import ScaleAlignment, align_scale, mse_nearest, mse_pointwise
from .gdp import (
    GdpParams,
    PrivacyBudget,
    SanitizedCurve,
    approx_dp_sigma,
    calibrate_sigma,
    compose,
    dp_epsilon_for_delta,
    gaussian_tradeoff,
    gdp_to_dp_delta,
    sample_gp_noise,
    sanitize,
    sensitivity_bound,
    tau_from_sample,
    verify_privacy_loss,
)
from .rkhs_mean import (
    CurveSample,
    RkhsMean,
    ambient_norm,
    rkhs_distance,
    rkhs_inner,
    rkhs_mean,
    rkhs_norm,
)
from .surface import (
    DiskSurface,
    PointCloud,
    RadialCurveSet,
    SyntheticFaceConfig,
    curves_to_point_cloud,
    extract_radial_curves,
    generalized_procrustes,
    generate_synthetic_dataset,
    normalize,
    procrustes_align,
    surface_area,
    surface_centroid,
)
from .utils import Coordinate, SensitivityProvenance, derive_seed

__all__ = [
    "AlignmentError",
    "ArtifactNotFoundError",
    "CircleGrid",
    "ConfigError",
    "Coordinate",
    "CurveSample",
    "DataError",
    "DiskSurface",
    "DomainError",
    "GdpParams",
    "InvariantError",
    "KernelEigenbasis",
    "NumericalError",
    "PeriodicKernelParams",
    "PipelineConfig",
    "PointCloud",
    "PointwiseSensitivity",
    "PrivacyBudget",
    "RadialCurveSet",
    "RadialGdpError",
    "RkhsMean",
    "SanitizedCurve",
    "ScaleAlignment",
    "SensitivityProvenance",
    "SyntheticFaceConfig",
    "align_scale",
    "ambient_norm",
    "approx_dp_sigma",
    "build_eigenbasis",
    "build_kernel_matrix",
    "calibrate_sigma",
    "circle_distance",
    "compose",
    "curves_to_point_cloud",
    "derive_seed",
    "dp_epsilon_for_delta",
    "dump_config",
    "eigendecompose",
    "extract_radial_curves",
    "gaussian_tradeoff",
    "gdp_to_dp_delta",
    "generalized_procrustes",
    "generate_synthetic_dataset",
    "kernel_eval",
    "load_config",
    "load_or_build_eigenbasis",
    "mse_nearest",
    "mse_pointwise",
    "normalize",
    "pointwise_mean",
    "pointwise_sanitize",
    "pointwise_sensitivity",
    "procrustes_align",
    "rkhs_distance",
    "rkhs_inner",
    "rkhs_mean",
    "rkhs_norm",
    "sample_gp_noise",
    "sanitize",
    "sensitivity_bound",
    "split_budget",
    "surface_area",
    "surface_centroid",
    "tau_from_sample",
    "verify_privacy_loss",
    "wrap",
]
