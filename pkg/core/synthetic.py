"""
Synthetic two-Gaussian benchmark, its Bayes-optimal rule with rejection, and
seeded dataset splitting.
"""
import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.integrate import quad
from scipy.special import expit, logit
from scipy.stats import norm

from core.exceptions import DataError
from core.types import Dataset, Decision, FeatureMatrix, RejectionCost, check_cost

SecondSpace = Literal["identity", "rotation", "squared"]


class GaussianMixtureSpec(BaseModel):
    """Two isotropic Gaussians with a shared standard deviation."""
    model_config = ConfigDict(frozen=True)

    mu_plus: Tuple[float, ...]
    mu_minus: Tuple[float, ...]
    sigma: float = Field(gt=0, allow_inf_nan=False)
    prior_plus: float = Field(default=0.5, gt=0, lt=1)
    dim: int = Field(ge=1)

    @model_validator(mode="after")
    def _dims_match(self) -> "GaussianMixtureSpec":
        if len(self.mu_plus) != self.dim or len(self.mu_minus) != self.dim:
            raise ValueError(
                f"Means must have dim={self.dim} entries, got {len(self.mu_plus)} and {len(self.mu_minus)}"
            )
        if not all(math.isfinite(v) for v in self.mu_plus + self.mu_minus):
            raise ValueError("Means must be finite")
        return self

    @classmethod
    def symmetric(cls, dim: int = 1, offset: float = 1.0, sigma: float = 1.0) -> "GaussianMixtureSpec":
        """Means +-offset along the first axis, equal priors."""
        mu = (offset,) + (0.0,) * (dim - 1)
        return cls(mu_plus=mu, mu_minus=tuple(-v for v in mu), sigma=sigma, prior_plus=0.5, dim=dim)

    def means(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.mu_plus, dtype=np.float64), np.asarray(self.mu_minus, dtype=np.float64)


def _sample_ids(m: int) -> Tuple[str, ...]:
    width = len(str(m - 1))
    return tuple(f"s{i:0{width}d}" for i in range(m))


def _rotation(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    # fix column signs so the rotation depends on the seed only
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def synth_gaussian(spec: GaussianMixtureSpec, m: int, seed: int = 0, second_space: SecondSpace = "identity",
                   projection_dim: Optional[int] = None) -> Dataset:
    """
    Draw m labelled samples from the mixture.

    phi holds the raw coordinates. phi_prime is one of
      identity  - a copy of phi
      rotation  - phi times a seeded random rotation, keeping the first projection_dim columns
      squared   - phi with its squared coordinates appended

    Args:
        spec: Mixture parameters
        m: Number of samples, >= 1
        seed: Generator seed
        second_space: Construction of phi_prime
        projection_dim: Output columns of the rotation space (defaults to spec.dim)

    Returns:
        Dataset
    """
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    rng = np.random.default_rng(seed)
    labels = np.where(rng.random(m) < spec.prior_plus, 1, -1)
    mu_plus, mu_minus = spec.means()
    centers = np.where(labels[:, None] == 1, mu_plus, mu_minus)
    x = centers + spec.sigma * rng.standard_normal((m, spec.dim))

    if second_space == "identity":
        x_prime = x.copy()
    elif second_space == "rotation":
        k = spec.dim if projection_dim is None else projection_dim
        if not 1 <= k <= spec.dim:
            raise ValueError(f"projection_dim must lie in [1, {spec.dim}], got {k}")
        x_prime = x @ _rotation(rng, spec.dim)[:, :k]
    elif second_space == "squared":
        x_prime = np.hstack([x, x * x])
    else:
        raise ValueError(f"Unknown second space '{second_space}'")

    ids = _sample_ids(m)
    return Dataset(labels, FeatureMatrix(x, ids), FeatureMatrix(x_prime, ids))


@dataclass(frozen=True)
class ChowRule:
    """Bayes decision with rejection for a GaussianMixtureSpec at cost c."""
    spec: GaussianMixtureSpec
    c: float

    def log_odds(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.spec.dim:
            raise DataError(f"Expected points with {self.spec.dim} coordinates, got shape {x.shape}")
        mu_plus, mu_minus = self.spec.means()
        s2 = self.spec.sigma ** 2
        bias = logit(self.spec.prior_plus) - (mu_plus @ mu_plus - mu_minus @ mu_minus) / (2.0 * s2)
        return x @ (mu_plus - mu_minus) / s2 + bias

    def posterior(self, x: np.ndarray) -> np.ndarray:
        """p(+1 | x)."""
        return expit(self.log_odds(x))

    def decide(self, x: np.ndarray) -> List[Decision]:
        p = self.posterior(x)
        confident = np.maximum(p, 1.0 - p) >= 1.0 - self.c
        codes = np.where(~confident, 0, np.where(p > 0.5, 1, 2))
        table = (Decision.REJECT, Decision.ACCEPT_POSITIVE, Decision.ACCEPT_NEGATIVE)
        return [table[code] for code in codes.tolist()]


def _oracle_risk(spec: GaussianMixtureSpec, c: float) -> float:
    mu_plus, mu_minus = spec.means()
    delta = mu_plus - mu_minus
    distance = float(np.linalg.norm(delta))
    pi = spec.prior_plus
    if distance == 0.0:
        return min(c, pi, 1.0 - pi)

    # along t = delta.x / |delta| the log-odds is slope * t + bias
    sigma = spec.sigma
    slope = distance / sigma ** 2
    bias = logit(pi) - (mu_plus @ mu_plus - mu_minus @ mu_minus) / (2.0 * sigma ** 2)
    mean_plus = float(delta @ mu_plus) / distance
    mean_minus = float(delta @ mu_minus) / distance

    def weighted_plus(t):
        return pi * norm.pdf(t, mean_plus, sigma)

    def weighted_minus(t):
        return (1.0 - pi) * norm.pdf(t, mean_minus, sigma)

    # predict -1 below t_low, reject between, predict +1 above t_high
    t_low = (logit(c) - bias) / slope
    t_high = (logit(1.0 - c) - bias) / slope
    quad_opts = {"epsabs": 1e-10, "epsrel": 1e-10, "limit": 200}
    wrong_negative, _ = quad(weighted_plus, -np.inf, t_low, **quad_opts)
    rejected, _ = quad(lambda t: c * (weighted_plus(t) + weighted_minus(t)), t_low, t_high, **quad_opts)
    wrong_positive, _ = quad(weighted_minus, t_high, np.inf, **quad_opts)
    return float(wrong_negative + rejected + wrong_positive)


def chow_oracle(spec: GaussianMixtureSpec, c) -> Tuple[ChowRule, float]:
    """
    Bayes-optimal rule with rejection and its expected per-sample risk.

    Rejects iff max(p, 1 - p) < 1 - c, otherwise predicts the more likely class.

    Args:
        spec: Mixture parameters
        c: Rejection cost (RejectionCost or float)

    Returns:
        tuple: (ChowRule, oracle_risk)
    """
    cost = c.value if isinstance(c, RejectionCost) else check_cost(c)
    return ChowRule(spec, cost), _oracle_risk(spec, cost)


class SplitSpec(BaseModel):
    """Fractions of a seeded split, e.g. (trainer, validation, test)."""
    model_config = ConfigDict(frozen=True)

    fractions: Tuple[float, ...] = (0.5, 0.25, 0.25)
    seed: int = 0

    @field_validator("fractions")
    @classmethod
    def _valid_fractions(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(v) < 2:
            raise ValueError("A split needs at least two fractions")
        if any(not (f > 0) for f in v):
            raise ValueError(f"Fractions must be positive, got {v}")
        if abs(math.fsum(v) - 1.0) > 1e-9:
            raise ValueError(f"Fractions must sum to 1, got {math.fsum(v)}")
        return v


def split_sizes(m: int, fractions: Tuple[float, ...]) -> List[int]:
    """Largest-remainder rounding of m * fractions; ties go to the earlier split."""
    raw = [m * f for f in fractions]
    sizes = [int(math.floor(r)) for r in raw]
    by_remainder = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in by_remainder[:m - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split(data: Dataset, spec: SplitSpec) -> Tuple[Dataset, ...]:
    """
    Disjoint, exhaustive, seeded split of `data`.

    Raises:
        DataError: A split would be empty
    """
    sizes = split_sizes(data.m, spec.fractions)
    if min(sizes) == 0:
        raise DataError(f"Split of {data.m} samples by {spec.fractions} leaves an empty part: {sizes}")
    order = np.random.default_rng(spec.seed).permutation(data.m)
    bounds = np.cumsum([0] + sizes)
    return tuple(data.subset(np.sort(order[lo:hi])) for lo, hi in zip(bounds[:-1], bounds[1:]))
