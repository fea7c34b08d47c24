"""
Shared value types for Learning-with-Rejection.

Everything here is immutable after construction and validates its invariants
in the constructor, so an invalid cost, label or feature matrix never reaches
the trainer.
"""
import math
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator

from core.exceptions import DataError, DimensionMismatchError


class Label(IntEnum):
    """Binary class label."""
    POSITIVE = 1
    NEGATIVE = -1


class Decision(str, Enum):
    """Three-valued outcome of a classifier with a reject option."""
    ACCEPT_POSITIVE = "accept_positive"
    ACCEPT_NEGATIVE = "accept_negative"
    REJECT = "reject"

    @property
    def is_reject(self) -> bool:
        return self is Decision.REJECT

    @property
    def predicted_label(self) -> Optional[int]:
        """+1 / -1 for accepted samples, None when rejected."""
        if self is Decision.ACCEPT_POSITIVE:
            return 1
        if self is Decision.ACCEPT_NEGATIVE:
            return -1
        return None


def check_cost(c: float) -> float:
    """Validate a rejection cost; 0 < c < 1/2 keeps beta finite and positive."""
    c = float(c)
    if not 0.0 < c < 0.5:
        raise ValueError(f"Rejection cost c must lie in (0, 1/2), got {c}")
    return c


class RejectionCost(BaseModel):
    """Cost charged per rejected sample (a wrong acceptance costs 1)."""
    model_config = ConfigDict(frozen=True)

    value: float

    def __init__(self, value: float, **data):
        super().__init__(value=value, **data)

    @field_validator("value")
    @classmethod
    def _in_range(cls, v: float) -> float:
        return check_cost(v)

    @property
    def beta(self) -> float:
        return beta_of(self)


def beta_of(c) -> float:
    """
    Rejector scale of the surrogate loss, beta = 1 / (1 - 2c).

    Args:
        c: RejectionCost or a raw float in (0, 1/2)

    Returns:
        float: beta
    """
    value = c.value if isinstance(c, RejectionCost) else check_cost(c)
    return 1.0 / (1.0 - 2.0 * value)


class LwrHyperparams(BaseModel):
    """Hyperparameters of the LwR objective (alpha is fixed to 1)."""
    model_config = ConfigDict(frozen=True)

    c: float
    lam: float = Field(gt=0, allow_inf_nan=False, description="Classifier regularization")
    lam_prime: float = Field(gt=0, allow_inf_nan=False, description="Rejector regularization")
    alpha: float = 1.0

    @field_validator("c")
    @classmethod
    def _cost_in_range(cls, v: float) -> float:
        return check_cost(v)

    @field_validator("alpha")
    @classmethod
    def _alpha_fixed(cls, v: float) -> float:
        if v != 1.0:
            raise ValueError(f"alpha is fixed to 1, got {v}")
        return v

    @computed_field  # type: ignore[misc]
    @property
    def beta(self) -> float:
        return beta_of(self.c)

    @property
    def cost(self) -> RejectionCost:
        return RejectionCost(self.c)


def validate_labels(values) -> np.ndarray:
    """
    Coerce a label sequence to a read-only int8 array of +1 / -1.

    Raises:
        DataError: If the labels are not integers, or any entry is not exactly +1 or -1
    """
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DataError(f"Labels must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DataError("Labels are empty")
    if arr.dtype.kind not in "iu":
        raise DataError(f"Labels must be integers, got dtype {arr.dtype} ({arr.tolist()[:5]})")
    if not np.all(np.isin(arr, (1, -1))):
        bad = [v for v in arr.tolist() if v not in (1, -1)]
        raise DataError(f"Labels must be +1 or -1, got {bad[:5]}")
    out = arr.astype(np.int8)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """An m x d matrix of finite reals with one unique id per row."""
    values: np.ndarray
    sample_ids: Tuple[str, ...]

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DataError(f"Feature matrix must be two-dimensional, got shape {values.shape}")
        m, d = values.shape
        if m < 1 or d < 1:
            raise DataError(f"Feature matrix needs at least one row and one column, got {values.shape}")
        ids = tuple(str(s) for s in self.sample_ids)
        if len(ids) != m:
            raise DataError(f"Got {len(ids)} sample ids for {m} rows")
        seen = set()
        for sample_id in ids:
            if sample_id in seen:
                raise DataError(f"Duplicate sample id '{sample_id}'")
            seen.add(sample_id)
        finite = np.isfinite(values).all(axis=1)
        if not finite.all():
            row = int(np.argmin(finite))
            raise DataError(f"Non-finite feature value for sample id '{ids[row]}'")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sample_ids", ids)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]

    def take(self, indices: Sequence[int]) -> "FeatureMatrix":
        idx = np.asarray(indices, dtype=np.intp)
        return FeatureMatrix(self.values[idx], tuple(self.sample_ids[i] for i in idx))

    def reindex(self, ids: Sequence[str]) -> "FeatureMatrix":
        """Reorder rows to follow `ids`; every id must be present."""
        position = {sample_id: i for i, sample_id in enumerate(self.sample_ids)}
        missing = [sample_id for sample_id in ids if sample_id not in position]
        if missing:
            raise DataError(f"Sample id '{missing[0]}' not found in feature matrix")
        return self.take([position[sample_id] for sample_id in ids])

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(values, self.sample_ids)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labels plus two id-aligned feature spaces: phi (classifier) and phi_prime (rejector)."""
    labels: np.ndarray
    phi: FeatureMatrix
    phi_prime: FeatureMatrix

    def __post_init__(self):
        labels = validate_labels(self.labels)
        if not (self.phi.rows == self.phi_prime.rows == labels.size):
            raise DataError(
                f"Row counts differ: labels={labels.size}, phi={self.phi.rows}, phi_prime={self.phi_prime.rows}"
            )
        if self.phi.sample_ids != self.phi_prime.sample_ids:
            raise DataError("Sample ids of phi and phi_prime are not the same sequence")
        object.__setattr__(self, "labels", labels)

    @property
    def m(self) -> int:
        return int(self.labels.size)

    @property
    def sample_ids(self) -> Tuple[str, ...]:
        return self.phi.sample_ids

    @property
    def is_single_class(self) -> bool:
        return np.unique(self.labels).size < 2

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.labels[idx], self.phi.take(idx), self.phi_prime.take(idx))


def decide(f_val: float, r_val: float) -> Decision:
    """
    LwR decision rule: reject iff r <= 0, otherwise the sign of f (f == 0 -> negative).

    Args:
        f_val: Classifier score f(x)
        r_val: Rejector score r(x)

    Returns:
        Decision
    """
    if not (math.isfinite(f_val) and math.isfinite(r_val)):
        raise DataError(f"Scores must be finite, got f={f_val}, r={r_val}")
    if r_val <= 0:
        return Decision.REJECT
    return Decision.ACCEPT_POSITIVE if f_val > 0 else Decision.ACCEPT_NEGATIVE


def decide_many(f_vals: np.ndarray, r_vals: np.ndarray) -> List[Decision]:
    """Vectorized `decide` over aligned score arrays."""
    f_vals = np.asarray(f_vals, dtype=np.float64)
    r_vals = np.asarray(r_vals, dtype=np.float64)
    if f_vals.shape != r_vals.shape:
        raise DimensionMismatchError(f"Score arrays differ in shape: {f_vals.shape} vs {r_vals.shape}")
    if not (np.isfinite(f_vals).all() and np.isfinite(r_vals).all()):
        raise DataError("Scores must be finite")
    codes = np.where(r_vals <= 0, 0, np.where(f_vals > 0, 1, 2))
    table = (Decision.REJECT, Decision.ACCEPT_POSITIVE, Decision.ACCEPT_NEGATIVE)
    return [table[code] for code in codes.tolist()]


@dataclass(frozen=True, eq=False)
class LwrModel:
    """Linear classifier f = w.phi + b and linear rejector r = u.phi' + b'."""
    w: np.ndarray
    b: float
    u: np.ndarray
    b_prime: float
    hyper: LwrHyperparams
    objective_value: float

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64).reshape(-1)
        u = np.array(self.u, dtype=np.float64).reshape(-1)
        scalars = (float(self.b), float(self.b_prime))
        if not (np.isfinite(w).all() and np.isfinite(u).all() and all(map(math.isfinite, scalars))):
            raise DataError("Model parameters must be finite")
        objective = float(self.objective_value)
        if not math.isfinite(objective) or objective < 0:
            raise DataError(f"Objective value must be finite and non-negative, got {objective}")
        w.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "b", scalars[0])
        object.__setattr__(self, "b_prime", scalars[1])
        object.__setattr__(self, "objective_value", objective)

    def check_dims(self, data: Dataset) -> None:
        if self.w.size != data.phi.dims or self.u.size != data.phi_prime.dims:
            raise DimensionMismatchError(
                f"Model dims (w={self.w.size}, u={self.u.size}) do not match data "
                f"(phi={data.phi.dims}, phi_prime={data.phi_prime.dims})"
            )

    def scores(self, data: Dataset) -> Tuple[np.ndarray, np.ndarray]:
        """Affine scores (f, r) for every sample."""
        self.check_dims(data)
        f_vals = data.phi.values @ self.w + self.b
        r_vals = data.phi_prime.values @ self.u + self.b_prime
        return f_vals, r_vals

    def decisions(self, data: Dataset) -> List[Decision]:
        f_vals, r_vals = self.scores(data)
        return decide_many(f_vals, r_vals)
