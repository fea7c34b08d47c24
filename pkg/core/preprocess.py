# core/preprocess.py
"""
Feature normalization for LwR datasets.

Normalization is never applied implicitly: the CLI enables it with
--normalize, statistics are fitted on the training split only, and the fitted
statistics travel inside the model file so evaluation uses the same transform.
"""
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from core.exceptions import DimensionMismatchError
from core.types import Dataset, FeatureMatrix


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-dimension z-score: (x - mean) / scale. Constant columns get scale 1."""
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).reshape(-1)
        scale = np.array(self.scale, dtype=np.float64).reshape(-1)
        if mean.shape != scale.shape:
            raise DimensionMismatchError(f"mean has {mean.size} entries, scale has {scale.size}")
        if not (np.isfinite(mean).all() and np.isfinite(scale).all() and (scale > 0).all()):
            raise ValueError("Standardizer statistics must be finite with positive scale")
        mean.setflags(write=False)
        scale.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def fit(cls, features: FeatureMatrix) -> "Standardizer":
        mean = features.values.mean(axis=0)
        scale = features.values.std(axis=0)
        return cls(mean=mean, scale=np.where(scale > 0, scale, 1.0))

    def transform(self, features: FeatureMatrix) -> FeatureMatrix:
        if features.dims != self.mean.size:
            raise DimensionMismatchError(f"Standardizer fitted on {self.mean.size} dims, got {features.dims}")
        return features.with_values((features.values - self.mean) / self.scale)

    def to_dict(self) -> Dict[str, List[float]]:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, record: Dict[str, List[float]]) -> "Standardizer":
        return cls(mean=record["mean"], scale=record["scale"])


@dataclass(frozen=True)
class DatasetNormalizer:
    """One Standardizer per feature space."""
    phi: Standardizer
    phi_prime: Standardizer

    @classmethod
    def fit(cls, train: Dataset) -> "DatasetNormalizer":
        return cls(Standardizer.fit(train.phi), Standardizer.fit(train.phi_prime))

    def transform(self, data: Dataset) -> Dataset:
        return Dataset(data.labels, self.phi.transform(data.phi), self.phi_prime.transform(data.phi_prime))

    def to_dict(self) -> Dict[str, Dict[str, List[float]]]:
        return {"phi": self.phi.to_dict(), "phi_prime": self.phi_prime.to_dict()}

    @classmethod
    def from_dict(cls, record: Dict[str, Dict[str, List[float]]]) -> "DatasetNormalizer":
        return cls(Standardizer.from_dict(record["phi"]), Standardizer.from_dict(record["phi_prime"]))
