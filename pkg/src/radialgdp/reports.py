"""
Structured release, evaluation and verification reports.

Reports are pydantic models written as indented JSON. Floats are serialized with their
shortest round-trip representation and no report carries timestamps or absolute paths,
so two runs with the same inputs and seed produce byte-identical files.
"""

import math
from pathlib import Path
from typing import Literal, Optional, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import DataError
from .utils import Coordinate, SensitivityProvenance

ReportT = TypeVar("ReportT", bound=BaseModel)


class _Report(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ReleaseRecord(_Report):
    """One sanitized mean curve: curve `curve_index`, coordinate `coordinate`."""

    curve_index: int = Field(ge=0)
    coordinate: Coordinate
    mu: float = Field(gt=0)
    phi: float = Field(gt=0)
    tau: float = Field(ge=0)
    delta_bound: float = Field(ge=0)
    sigma: float = Field(ge=0)
    seed: int
    sensitivity_provenance: SensitivityProvenance


class ReleaseReport(_Report):
    mechanism: Literal["functional-gdp"] = "functional-gdp"
    n: int = Field(ge=1, description="Number of individuals averaged.")
    J: int = Field(ge=1)
    m: int = Field(ge=1)
    rho: float
    alpha: float
    mu_x: float
    mu_y: float
    mu_z: float
    mu_total: float
    master_seed: int
    sensitivity_provenance: SensitivityProvenance
    releases: list[ReleaseRecord]

    def ledger_total(self) -> float:
        """Composes all per-release budgets; equals `mu_total` for a consistent report."""
        return math.sqrt(math.fsum(record.mu**2 for record in self.releases))


class PointwiseReleaseReport(_Report):
    """
    Summary of a point-wise baseline release. The per-entry noise scales
    `Delta_kl / mu_p` are written next to the report as a `P x 3` CSV table.
    """

    mechanism: Literal["pointwise-gdp"] = "pointwise-gdp"
    n: int = Field(ge=1)
    n_points: int = Field(ge=1)
    mu_total: float = Field(gt=0)
    mu_p: float = Field(gt=0)
    n_releases: int = Field(ge=1)
    seed: int
    sensitivity_provenance: SensitivityProvenance
    noise_scale_file: str
    noise_scale_min: float
    noise_scale_max: float

    def ledger_total(self) -> float:
        return math.sqrt(self.n_releases) * self.mu_p


class EvaluationRecord(_Report):
    metric: Literal["mse_pointwise", "mse_nearest"]
    reference_id: str
    estimate_id: str
    value: float
    scale_a: Optional[float] = None
    iterations: Optional[int] = None
    mu_total: Optional[float] = None


class EvaluationReport(_Report):
    """
    MSE values of the private estimates. `render_table` prints them the way they are
    usually tabulated, scaled by `10 ** -scale_exponent` (i.e. "all values are at E-04").
    """

    scale_exponent: int = -4
    records: list[EvaluationRecord]

    def render_table(self) -> list[tuple[str, str]]:
        return [
            (
                f"{record.estimate_id} vs {record.reference_id} ({record.metric})",
                f"{record.value / 10**self.scale_exponent:.4f}",
            )
            for record in self.records
        ]


class NormalityCheck(_Report):
    """
    Compares the noise functional `<h(D) - h(D'), Z>_H` with `N(0, distance^2)`.
    """

    expected_std: float
    empirical_mean: float
    empirical_std: float
    ks_statistic: Optional[float] = None
    ks_pvalue: Optional[float] = None


class TailCheck(_Report):
    epsilon: float
    empirical_upper: float
    predicted_upper: float
    bound_upper: float
    empirical_lower: float
    predicted_lower: float
    empirical_delta: float
    predicted_delta: float
    bound_delta: float
    standard_error: float
    within_tolerance: bool
    violation: bool


class TradeoffCheck(_Report):
    alpha: float
    empirical_type2: float
    realized_type2: float
    bound_type2: float
    standard_error: float
    passes: bool


class VerificationReport(_Report):
    mu: float
    sigma: float
    delta_bound: float
    realized_distance: float
    realized_mu: float
    n_samples: int
    seed: int
    sensitivity_within_bound: bool
    normality: NormalityCheck
    tails: list[TailCheck]
    tradeoff: TradeoffCheck

    @property
    def has_violation(self) -> bool:
        return (
            not self.sensitivity_within_bound
            or any(tail.violation for tail in self.tails)
            or not self.tradeoff.passes
        )


class VerificationSuite(_Report):
    """Verification reports of several adjacent dataset pairs with their dataset settings."""

    n: int
    tau: float
    phi: float
    m: int
    pairs: list[VerificationReport]


def write_report(report: BaseModel, path: Path) -> None:
    Path(path).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")


def read_report(cls: type[ReportT], path: Path) -> ReportT:
    """
    Raises:
        DataError: If the file is not a valid report of type `cls`.
    """
    try:
        return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise DataError(f"Invalid {cls.__name__}: {e}", path=Path(path)) from e
