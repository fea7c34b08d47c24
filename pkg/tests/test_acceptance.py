# tests/test_acceptance.py
"""
End-to-end check of LwR against the analytic rejection oracle on the
1-D symmetric Gaussian benchmark.
"""
import pytest

from core.evaluation import evaluate
from core.exceptions import ConvergenceError
from core.solver import TrainConfig
from core.synthetic import GaussianMixtureSpec, chow_oracle, synth_gaussian
from core.trainer import train
from core.types import LwrHyperparams

LAMBDA_GRID = (1e-2, 1e-1)
SOLVER = TrainConfig(max_iterations=50_000)


def fit(data, c, lam):
    hyper = LwrHyperparams(c=c, lam=lam, lam_prime=lam)
    try:
        return train(data, hyper, SOLVER)
    except ConvergenceError as err:
        return err.best_iterate


@pytest.fixture(scope="module")
def splits():
    """Symmetric spec with train, validation and test draws of 2000, 1000 and 10,000 samples."""
    spec = GaussianMixtureSpec.symmetric()
    # x and x^2 let the linear rejector express the symmetric rejection slab
    return (
        spec,
        synth_gaussian(spec, 2000, seed=11, second_space="squared"),
        synth_gaussian(spec, 1000, seed=12, second_space="squared"),
        synth_gaussian(spec, 10_000, seed=13, second_space="squared"),
    )


@pytest.mark.slow
class TestSyntheticBenchmark:
    """LwR lands close to the Bayes risk with rejection."""

    @pytest.mark.parametrize("c", [0.1, 0.2, 0.3, 0.4])
    def test_near_oracle(self, splits, c):
        """Test risk per sample is within 0.02 of the oracle risk."""
        spec, train_data, val_data, test_data = splits
        models = [fit(train_data, c, lam) for lam in LAMBDA_GRID]
        best = min(models, key=lambda m: evaluate(m.decisions(val_data), val_data.labels, c).risk_per_sample)

        risk = evaluate(best.decisions(test_data), test_data.labels, c).risk_per_sample
        _, oracle = chow_oracle(spec, c)
        assert risk <= oracle + 0.02

    def test_decomposition_along_curve(self, splits):
        """risk = (1 - acc) * accepted + c * rejected for each c of the sweep."""
        _, train_data, _, test_data = splits
        for c in (0.1, 0.4):
            report = evaluate(fit(train_data, c, LAMBDA_GRID[0]).decisions(test_data), test_data.labels, c)
            accepted = report.n_samples - report.n_rejected
            wrong = (1 - report.accuracy_nonrejected) * accepted if accepted else 0.0
            assert report.risk_total == pytest.approx(wrong + c * report.n_rejected)
