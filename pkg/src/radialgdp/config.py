"""
Pipeline configuration: a frozen pydantic model stored as a flat JSON object, one key per
field. Unknown keys and values outside a module's preconditions are rejected when the
configuration is loaded, before any computation starts.
"""

import json
from pathlib import Path
from typing import Any, Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    ValidationError,
    model_validator,
)

from .errors import ConfigError
from .gdp import MIN_VERIFY_SAMPLES, PrivacyBudget
from .utils import Coordinate, Reference, SensitivityProvenance


class PipelineConfig(BaseModel):
    """
    Settings of every pipeline stage. The defaults reproduce the published experiment:
    `J = 23` curves on `m = 80` angles, `phi = (0.01, 0.01, 0.005)` and
    `mu = (0.2, 0.2, 0.55)`, for a total budget of `2.9661`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", allow_inf_nan=False)

    workdir: Path = Field(Path("radialgdp-run"), description="Root of the stage directories.")
    input_dir: Optional[Path] = Field(
        None,
        description="Directory of surface CSV files to preprocess; the generated dataset "
        "is used when unset.",
    )

    m: int = Field(80, ge=3, description="Number of angles per radial curve.")
    J: int = Field(23, ge=1, description="Number of radial curves per surface.")
    rho: PositiveFloat = Field(1.0, description="Kernel range.")
    alpha: float = Field(1.0, gt=0, le=1, description="Kernel smoothness.")
    phi_x: PositiveFloat = 0.01
    phi_y: PositiveFloat = 0.01
    phi_z: PositiveFloat = 0.005
    mu_x: PositiveFloat = 0.2
    mu_y: PositiveFloat = 0.2
    mu_z: PositiveFloat = 0.55
    seed: int = Field(0, ge=0, description="Master seed of every randomized stage.")
    sensitivity_mode: SensitivityProvenance = SensitivityProvenance.data_driven
    tau_x: Optional[NonNegativeFloat] = Field(
        None, description="Supplied norm bound of the x curves."
    )
    tau_y: Optional[NonNegativeFloat] = None
    tau_z: Optional[NonNegativeFloat] = None

    n_surfaces: int = Field(200, ge=1, description="Size of the generated dataset.")
    n_radii: int = Field(46, ge=2, description="Radii per generated surface.")
    perturbation_amplitude: NonNegativeFloat = 0.05
    rotation_jitter_deg: NonNegativeFloat = 0.0
    scale_jitter: NonNegativeFloat = 0.0
    procrustes_iterations: int = Field(3, ge=1)

    baseline_mu_totals: tuple[PositiveFloat, ...] = Field(
        (2.0, 3.0), min_length=1, description="Total budgets of the point-wise baseline."
    )
    reference: Reference = Field(
        Reference.both, description="Non-private mean the estimates are evaluated against."
    )

    verify_samples: int = Field(100_000, ge=MIN_VERIFY_SAMPLES)
    verify_pairs: int = Field(3, ge=1, description="Adjacent dataset pairs to verify.")
    verify_n: int = Field(50, ge=1)
    verify_tau: PositiveFloat = 1.0
    verify_phi: PositiveFloat = 0.01
    verify_mu: PositiveFloat = 1.0
    verify_epsilons: tuple[PositiveFloat, ...] = (0.25, 0.5, 1.0, 2.0)
    verify_alpha: float = Field(0.05, gt=0, lt=1)

    workers: int = Field(1, ge=1, description="Threads for per-surface and per-release work.")
    cache_eigenbasis: bool = False

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.sensitivity_mode is SensitivityProvenance.supplied and None in (
            self.tau_x,
            self.tau_y,
            self.tau_z,
        ):
            raise ValueError("Supplied sensitivity needs tau_x, tau_y and tau_z.")
        if self.input_dir is None and self.J > self.n_radii:
            raise ValueError(f"J={self.J} curves need at least as many radii, got {self.n_radii}.")
        return self

    def phi_for(self, coordinate: Coordinate | str) -> float:
        return getattr(self, f"phi_{Coordinate(coordinate)}")

    def tau_for(self, coordinate: Coordinate | str) -> Optional[float]:
        return getattr(self, f"tau_{Coordinate(coordinate)}")

    @property
    def budget(self) -> PrivacyBudget:
        return PrivacyBudget(self.mu_x, self.mu_y, self.mu_z, self.J)


def _format_errors(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in e['loc']) or 'config'}: {e['msg']}"
        for e in error.errors()
    )


def make_config(**values: Any) -> PipelineConfig:
    """
    Raises:
        ConfigError: If a value is invalid or a key unknown.
    """
    try:
        return PipelineConfig(**values)
    except ValidationError as e:
        raise ConfigError(_format_errors(e)) from e


def load_config(path: Optional[Path] = None, **overrides: Any) -> PipelineConfig:
    """
    Reads a flat JSON config file and applies `overrides` on top (an override wins over
    the file). Without a path only the defaults and overrides are used.

    Raises:
        ConfigError: If the file cannot be read, is not a JSON object, or the merged
            values are invalid.
    """
    values: dict[str, Any] = {}
    if path is not None:
        try:
            values = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Could not read config file {path}: {e}") from e
        if not isinstance(values, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object.")
    values.update(overrides)
    return make_config(**values)


def dump_config(config: PipelineConfig, path: Path) -> None:
    """Writes the config so that `load_config(path) == config`."""
    Path(path).write_text(config.model_dump_json(indent=2) + "\n", encoding="utf-8")
