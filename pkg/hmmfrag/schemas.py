"""Pydantic schemas for run parameters, fit results and reports."""
from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from hmmfrag.config import settings
from hmmfrag.models import Hmm


class DiscretizationSpec(BaseModel):
    """Cut points that map raw values to symbols ``0..n_bins-1``.

    A value equal to a cut point is assigned to the upper bin.
    """

    n_bins: int = Field(ge=2)
    cut_points: List[float]
    labels: List[str]
    quantile_method: str = "linear"
    boundary: str = "upper"

    @model_validator(mode="after")
    def _check_cuts(self):
        if len(self.cut_points) != self.n_bins - 1:
            raise ValueError(
                f"expected {self.n_bins - 1} cut points for {self.n_bins} bins, "
                f"got {len(self.cut_points)}"
            )
        if any(b <= a for a, b in zip(self.cut_points, self.cut_points[1:])):
            raise ValueError("cut points must be strictly increasing")
        if len(self.labels) != self.n_bins:
            raise ValueError(f"expected {self.n_bins} labels, got {len(self.labels)}")
        return self


class FitConfig(BaseModel):
    """Baum-Welch settings."""

    n_states: int = Field(ge=1)
    max_iters: int = Field(default_factory=lambda: settings.fit_max_iters, ge=1)
    tol: float = Field(default_factory=lambda: settings.fit_tol, gt=0)
    seed: int = 0
    n_restarts: int = Field(default=1, ge=1)
    label: Optional[str] = None


class FitResult(BaseModel):
    model: Hmm
    log_likelihood_trace: List[float]
    converged: bool
    iterations_used: int
    best_restart: int = 0
    absent_symbols: List[int] = Field(default_factory=list)

    @property
    def final_log_likelihood(self) -> float:
        return self.log_likelihood_trace[-1]


class SweepParams(BaseModel):
    """Fragment lengths and sample size for a sampled comparison."""

    r_min: int = Field(default=3, ge=2)
    r_max: int = Field(default=7, ge=2)
    k: int = Field(default=1000, ge=2)
    seed: int = 0

    @model_validator(mode="after")
    def _check_range(self):
        if self.r_max < self.r_min:
            raise ValueError(f"r_max ({self.r_max}) must be >= r_min ({self.r_min})")
        return self


class ExactParams(BaseModel):
    """Fragment-length range for a closed-form comparison."""

    r_min: int = Field(default=1, ge=1)
    r_max: int = Field(default=10, ge=1)
    k: Optional[int] = Field(default=None, ge=2)

    @model_validator(mode="after")
    def _check_range(self):
        if self.r_max < self.r_min:
            raise ValueError(f"r_max ({self.r_max}) must be >= r_min ({self.r_min})")
        return self


class TestResult(BaseModel):
    """One row of a sampled fragment comparison.

    ``mean_diff`` is ``mu1_hat - mu2_hat`` over the same sampled fragments;
    ``p_value`` is the one-sided upper-tail probability of ``z``.
    """

    __test__ = False

    r: int
    k: int
    n: int
    seed: int
    fragment_space: int
    sparsity_ratio: float
    sparsity_warning: bool
    mean_diff: float
    sample_std: float
    z: float
    p_value: float
    p_value_two_sided: float
    mu1_hat: float
    mu2_hat: float
    zero_variance: bool = False


class RatioRow(BaseModel):
    """Estimated ``mu_hat_j(numerator_r) / mu_hat_j(denominator_r)`` for both models."""

    numerator_r: int
    denominator_r: int
    mu1_ratio: Optional[float]
    mu2_ratio: Optional[float]


class SweepReport(BaseModel):
    model1_label: str
    model2_label: str
    sequence_length: int
    alphabet_size: int
    results: List[TestResult]
    ratios: List[RatioRow]
    full_log_likelihood_1: Optional[float] = None
    full_log_likelihood_2: Optional[float] = None


class ExactComparison(BaseModel):
    """Closed-form quantities at one fragment length.

    ``second_moment`` is ``E[(L_1 - L_2)^2]``; ``sigma2`` subtracts ``mu_12^2``.
    """

    r: int
    mu_1: float = Field(ge=0)
    mu_2: float = Field(ge=0)
    mu_12: float
    second_moment: float = Field(ge=0)
    sigma2: float = Field(ge=0)
    variance_1: float = Field(ge=0)
    variance_2: float = Field(ge=0)
    lambda_1: float
    lambda_2: float


class ExactRow(ExactComparison):
    ratio_1: Optional[float] = None
    ratio_2: Optional[float] = None
    expected_z: Optional[float] = None

    @field_validator("ratio_1", "ratio_2", mode="before")
    @classmethod
    def _nan_to_none(cls, value):
        if value is not None and value != value:
            return None
        return value


class ExactReport(BaseModel):
    reference_label: str
    model1_label: str
    model2_label: str
    k: Optional[int] = None
    rows: List[ExactRow]
    lambda_1: float
    lambda_2: float
    threshold_1_over_2: Optional[int]
    threshold_2_over_1: Optional[int]
