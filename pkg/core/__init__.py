# core/__init__.py
"""
Core learning-with-rejection modules: types, surrogate objective, solver,
trainer, baselines, evaluation, reference oracle and synthetic benchmark.
"""
from .types import Dataset, Decision, FeatureMatrix, LwrHyperparams, LwrModel, RejectionCost
from .objective import primal_objective, recover_slacks, subgradient, surrogate_loss
from .trainer import train, train_with_report
from .evaluation import evaluate, metrics, risk_lwr, tradeoff_curve

__all__ = [
    'Dataset', 'Decision', 'FeatureMatrix', 'LwrHyperparams', 'LwrModel', 'RejectionCost',
    'primal_objective', 'recover_slacks', 'subgradient', 'surrogate_loss',
    'train', 'train_with_report',
    'evaluate', 'metrics', 'risk_lwr', 'tradeoff_curve'
]
