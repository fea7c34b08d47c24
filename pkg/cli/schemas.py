# cli/schemas.py
"""
Pydantic schemas for CLI run configurations and model files.
"""
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, FilePath, DirectoryPath, field_validator, model_validator

from core.baselines import CalibratedLinearModel, ThresholdModel
from core.preprocess import DatasetNormalizer
from core.solver import StepSchedule, TrainConfig
from core.types import LwrHyperparams, LwrModel, check_cost

DEFAULT_GRID: Tuple[float, ...] = (1e-3, 1e-2, 1e-1, 1.0, 10.0)
DEFAULT_C_LIST: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4)


def _split_list(v: Any) -> Any:
    """Accept "0.1,0.2" (flags and config files) as well as real sequences."""
    if isinstance(v, str):
        return tuple(part.strip() for part in v.split(",") if part.strip())
    return v


class RunConfig(BaseModel):
    """Fields shared by every command."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    out_dir: Path = Field(default=Path("runs"), description="Output directory")
    seed: int = Field(default=0, description="Seed for splits and Monte-Carlo draws")
    quiet: bool = Field(default=False, description="Hide progress bars")


class CostListMixin(BaseModel):
    c_list: Tuple[float, ...] = Field(default=DEFAULT_C_LIST, description="Rejection costs in (0, 1/2)")

    @field_validator("c_list", mode="before")
    @classmethod
    def _parse_c_list(cls, v):
        return _split_list(v)

    @field_validator("c_list")
    @classmethod
    def _valid_costs(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v:
            raise ValueError("c_list must not be empty")
        for c in v:
            check_cost(c)
        if len(set(v)) != len(v):
            raise ValueError(f"c_list has duplicate values: {v}")
        return tuple(sorted(v))


class TrainingOptions(CostListMixin, RunConfig):
    """Training data, optional validation data, grids and solver knobs."""
    labels: FilePath
    phi: FilePath
    phi_prime: FilePath
    val_labels: Optional[FilePath] = None
    val_phi: Optional[FilePath] = None
    val_phi_prime: Optional[FilePath] = None
    val_fraction: float = Field(default=0.0, ge=0, lt=1, description="Held-out share of the training files")
    lambda_grid: Tuple[float, ...] = DEFAULT_GRID
    lambda_prime_grid: Tuple[float, ...] = DEFAULT_GRID
    normalize: bool = False
    baselines: bool = False
    max_iterations: int = Field(default=200_000, ge=1)
    tolerance: float = Field(default=1e-6, gt=0)
    initial_step: float = Field(default=1.0, gt=0)

    @field_validator("lambda_grid", "lambda_prime_grid", mode="before")
    @classmethod
    def _parse_grid(cls, v):
        return _split_list(v)

    @field_validator("lambda_grid", "lambda_prime_grid")
    @classmethod
    def _positive_grid(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v:
            raise ValueError("Regularization grid must not be empty")
        if any(not (math.isfinite(x) and x > 0) for x in v):
            raise ValueError(f"Regularization grid values must be positive and finite, got {v}")
        if len(set(v)) != len(v):
            raise ValueError(f"Regularization grid has duplicate values: {v}")
        return v

    @model_validator(mode="after")
    def _validation_source(self):
        given = [p is not None for p in (self.val_labels, self.val_phi, self.val_phi_prime)]
        if any(given) and not all(given):
            raise ValueError("val_labels, val_phi and val_phi_prime must be given together")
        if all(given) and self.val_fraction > 0:
            raise ValueError("Give either validation files or val_fraction, not both")
        return self

    @property
    def has_validation_files(self) -> bool:
        return self.val_labels is not None

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            step_schedule=StepSchedule(initial_step=self.initial_step),
            seed=self.seed,
        )


class TrainRunConfig(TrainingOptions):
    """Configuration of `lwr train`."""


class ExternalProbabilityOptions(BaseModel):
    """Probabilities from a classifier trained elsewhere, thresholded like the SVM baseline."""
    probabilities: Optional[FilePath] = None
    val_probabilities: Optional[FilePath] = None

    @model_validator(mode="after")
    def _both_or_neither(self):
        if (self.probabilities is None) != (self.val_probabilities is None):
            raise ValueError("probabilities and val_probabilities must be given together")
        return self


class EvalRunConfig(ExternalProbabilityOptions, CostListMixin, RunConfig):
    """Configuration of `lwr eval`."""
    labels: FilePath
    phi: FilePath
    phi_prime: FilePath
    model_dir: Optional[DirectoryPath] = None
    val_labels: Optional[FilePath] = None

    @model_validator(mode="after")
    def _something_to_evaluate(self):
        if self.model_dir is None and self.probabilities is None:
            raise ValueError("Nothing to evaluate: give model_dir and/or probabilities")
        if self.probabilities is not None and self.val_labels is None:
            raise ValueError("Tuning a threshold on val_probabilities needs val_labels")
        return self


class SweepRunConfig(ExternalProbabilityOptions, TrainingOptions):
    """Configuration of `lwr sweep`: train on a grid, then evaluate every c on the test files."""
    test_labels: FilePath
    test_phi: FilePath
    test_phi_prime: FilePath
    baselines: bool = True
    num_draws: int = Field(default=1000, ge=1, description="Sign vectors per Rademacher estimate")

    @model_validator(mode="after")
    def _external_needs_validation(self):
        if self.probabilities is not None and not self.has_validation_files:
            raise ValueError("External probabilities need validation files (val_labels, val_phi, val_phi_prime)")
        return self


class SynthRunConfig(CostListMixin, RunConfig):
    """Configuration of `lwr synth`."""
    m: int = Field(default=4000, ge=1)
    dim: int = Field(default=2, ge=1)
    offset: float = Field(default=1.0, gt=0, description="Class means at +-offset on the first axis")
    sigma: float = Field(default=1.0, gt=0)
    prior_plus: float = Field(default=0.5, gt=0, lt=1)
    second_space: Literal["identity", "rotation", "squared"] = "identity"
    projection_dim: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _projection_fits(self):
        if self.projection_dim is not None:
            if self.second_space != "rotation":
                raise ValueError("projection_dim applies to the rotation second space only")
            if self.projection_dim > self.dim:
                raise ValueError(f"projection_dim {self.projection_dim} exceeds dim {self.dim}")
        return self


class LwrModelRecord(BaseModel):
    """JSON form of a trained LwR model."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["lwr"] = "lwr"
    c: float
    lam: float
    lam_prime: float
    w: List[float]
    b: float
    u: List[float]
    b_prime: float
    objective_value: float
    lambda_grid: List[float] = Field(default_factory=list, description="Grid lam was selected from")
    lambda_prime_grid: List[float] = Field(default_factory=list, description="Grid lam_prime was selected from")
    normalizer: Optional[Dict[str, Dict[str, List[float]]]] = None

    @classmethod
    def from_model(cls, model: LwrModel, normalizer: Optional[DatasetNormalizer] = None,
                   lambda_grid: Sequence[float] = (), lambda_prime_grid: Sequence[float] = ()) -> "LwrModelRecord":
        return cls(
            c=model.hyper.c,
            lam=model.hyper.lam,
            lam_prime=model.hyper.lam_prime,
            w=model.w.tolist(),
            b=model.b,
            u=model.u.tolist(),
            b_prime=model.b_prime,
            objective_value=model.objective_value,
            lambda_grid=list(lambda_grid),
            lambda_prime_grid=list(lambda_prime_grid),
            normalizer=None if normalizer is None else normalizer.to_dict(),
        )

    def to_model(self) -> LwrModel:
        hyper = LwrHyperparams(c=self.c, lam=self.lam, lam_prime=self.lam_prime)
        return LwrModel(w=self.w, b=self.b, u=self.u, b_prime=self.b_prime, hyper=hyper,
                        objective_value=self.objective_value)

    def to_normalizer(self) -> Optional[DatasetNormalizer]:
        return None if self.normalizer is None else DatasetNormalizer.from_dict(self.normalizer)


class SvmModelRecord(BaseModel):
    """JSON form of the calibrated SVM with its tuned threshold."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["svm"] = "svm"
    c: float
    lam: float
    w: List[float]
    b: float
    cal_a: float
    cal_b: float
    theta: float
    lambda_grid: List[float] = Field(default_factory=list, description="Grid lam was selected from")
    normalizer: Optional[Dict[str, Dict[str, List[float]]]] = None

    @property
    def lam_prime(self) -> Optional[float]:
        return None

    @property
    def lambda_prime_grid(self) -> List[float]:
        return []

    @classmethod
    def from_model(cls, model: ThresholdModel, c: float, lam: float, normalizer: Optional[DatasetNormalizer] = None,
                   lambda_grid: Sequence[float] = ()) -> "SvmModelRecord":
        scorer = model.scorer
        return cls(
            c=c,
            lam=lam,
            w=scorer.w.tolist(),
            b=scorer.b,
            cal_a=scorer.cal_a,
            cal_b=scorer.cal_b,
            theta=model.theta,
            lambda_grid=list(lambda_grid),
            normalizer=None if normalizer is None else normalizer.to_dict(),
        )

    def to_model(self) -> ThresholdModel:
        scorer = CalibratedLinearModel(w=self.w, b=self.b, cal_a=self.cal_a, cal_b=self.cal_b)
        return ThresholdModel(theta=self.theta, scorer=scorer)

    def to_normalizer(self) -> Optional[DatasetNormalizer]:
        return None if self.normalizer is None else DatasetNormalizer.from_dict(self.normalizer)


class CandidateRecord(BaseModel):
    """One (c, lambda, lambda') cell of the training grid."""
    method: str
    c: float
    lam: float
    lam_prime: Optional[float] = None
    objective: Optional[float] = None
    iterations: Optional[int] = None
    stop_reason: Optional[str] = None
    theta: Optional[float] = None
    validation_risk: float
    selected: bool = False


class TrainReportRecord(BaseModel):
    """Written as train_report.json."""
    lambda_grid: List[float]
    lambda_prime_grid: List[float]
    c_list: List[float]
    validation: str
    normalize: bool
    candidates: List[CandidateRecord]
    model_files: List[str]
