# tests/conftest.py
"""
Pytest configuration and fixtures for LwR tests.
"""
import os
from pathlib import Path

import numpy as np
import pytest

# Keep test logs quiet unless asked otherwise
os.environ.setdefault("LOG_LEVEL", "WARNING")

from core.solver import TrainConfig  # noqa: E402
from core.types import Dataset, FeatureMatrix, LwrHyperparams  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


def make_dataset(labels, phi, phi_prime=None, ids=None) -> Dataset:
    """Build a Dataset from plain arrays (phi_prime defaults to phi)."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim == 1:
        phi = phi[:, None]
    phi_prime = phi if phi_prime is None else np.asarray(phi_prime, dtype=np.float64)
    if phi_prime.ndim == 1:
        phi_prime = phi_prime[:, None]
    ids = ids or [f"s{i}" for i in range(phi.shape[0])]
    return Dataset(np.asarray(labels), FeatureMatrix(phi, ids), FeatureMatrix(phi_prime, ids))


def random_tiny_dataset(rng: np.random.Generator, m: int = None, d: int = None, d_prime: int = None) -> Dataset:
    """At most 12 samples and phi.dims + phi_prime.dims + 2 <= 6, both labels present."""
    m = m or int(rng.integers(4, 13))
    d = d or int(rng.integers(1, 3))
    d_prime = d_prime or int(rng.integers(1, 5 - d))
    labels = np.where(np.arange(m) % 2 == 0, 1, -1)
    rng.shuffle(labels)
    phi = rng.normal(size=(m, d)) + 0.8 * labels[:, None]
    phi_prime = rng.normal(size=(m, d_prime))
    return make_dataset(labels, phi, phi_prime)


@pytest.fixture
def fixtures_dir():
    """Directory holding the checked-in fixture files."""
    return FIXTURES


@pytest.fixture
def toy_paths(fixtures_dir):
    """Label, phi and phi_prime paths of the 3-sample toy dataset."""
    return (
        fixtures_dir / "toy_labels.csv",
        fixtures_dir / "toy_phi.csv",
        fixtures_dir / "toy_phi_prime.csv",
    )


@pytest.fixture
def separable_1d():
    """Two 1-D points at -1 (label -1) and +1 (label +1), phi == phi_prime."""
    return make_dataset([-1, 1], [-1.0, 1.0])


@pytest.fixture
def hyper():
    """c = 0.25, lambda = lambda' = 1."""
    return LwrHyperparams(c=0.25, lam=1.0, lam_prime=1.0)


@pytest.fixture
def fast_cfg():
    """Solver settings sized for unit tests."""
    return TrainConfig(max_iterations=20_000, tolerance=1e-7)


@pytest.fixture
def rng():
    """Seeded generator."""
    return np.random.default_rng(12345)
