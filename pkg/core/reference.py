"""
Slow reference computations used to validate the trainer and to report the
generalization gap.

`reference_solve` builds the slack-form LwR problem straight from the data
(no shared code with core/objective.py), solves it from a cold start, then
polishes every coordinate with bounded one-dimensional searches over a
shrinking box. Only desk-scale problems are accepted.
"""
import itertools
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize, minimize_scalar

from core.evaluation import evaluate
from core.exceptions import DataError
from core.types import Dataset, FeatureMatrix, LwrHyperparams, LwrModel
from utils.logger import log

MAX_REFERENCE_PARAMS = 6
MAX_REFERENCE_SAMPLES = 12
MAX_EXACT_SAMPLES = 12

# box half-widths of the coordinate polish, 1 down to 1e-9
_BOX_WIDTHS = tuple(10.0 ** -k for k in range(10))
_SWEEPS_PER_BOX = 2


def _reference_objective(theta: np.ndarray, data: Dataset, hyper: LwrHyperparams) -> float:
    d = data.phi.dims
    w, b, u, b_prime = theta[:d], theta[d], theta[d + 1:-1], theta[-1]
    y = data.labels.astype(np.float64)
    f_vals = data.phi.values @ w + b
    r_vals = data.phi_prime.values @ u + b_prime
    classification = 1.0 + 0.5 * hyper.alpha * (r_vals - y * f_vals)
    rejection = hyper.c * (1.0 - hyper.beta * r_vals)
    losses = np.maximum(np.maximum(classification, rejection), 0.0)
    return 0.5 * hyper.lam * float(w @ w) + 0.5 * hyper.lam_prime * float(u @ u) + float(losses.sum())


def _cold_start_qp(data: Dataset, hyper: LwrHyperparams) -> np.ndarray:
    """SLSQP on z = (w, b, u, b', xi) from the feasible point theta = 0, xi = 1."""
    m, d, d_prime = data.m, data.phi.dims, data.phi_prime.dims
    p = d + d_prime + 2
    y = data.labels.astype(np.float64)
    half_alpha = 0.5 * hyper.alpha
    c_beta = hyper.c * hyper.beta
    eye = np.eye(m)

    # xi_i - 1 - alpha/2 (r_i - y_i f_i) >= 0
    classification = np.hstack([
        half_alpha * y[:, None] * data.phi.values,
        half_alpha * y[:, None],
        -half_alpha * data.phi_prime.values,
        -half_alpha * np.ones((m, 1)),
        eye,
    ])
    # xi_i - c (1 - beta r_i) >= 0
    rejection = np.hstack([
        np.zeros((m, d + 1)),
        c_beta * data.phi_prime.values,
        c_beta * np.ones((m, 1)),
        eye,
    ])
    jac = np.vstack([classification, rejection])
    rhs = np.concatenate([np.ones(m), np.full(m, hyper.c)])

    reg = np.zeros(p)
    reg[:d] = hyper.lam
    reg[d + 1:d + 1 + d_prime] = hyper.lam_prime

    def objective(z):
        theta = z[:p]
        return 0.5 * float(reg @ (theta * theta)) + float(z[p:].sum()), np.concatenate([reg * theta, np.ones(m)])

    z0 = np.concatenate([np.zeros(p), np.ones(m)])
    result = minimize(
        objective,
        z0,
        jac=True,
        method="SLSQP",
        bounds=[(None, None)] * p + [(0.0, None)] * m,
        constraints=[{"type": "ineq", "fun": lambda z: jac @ z - rhs, "jac": lambda z: jac}],
        options={"maxiter": 2000, "ftol": 1e-15},
    )
    if not result.success:
        log.debug(f"Reference QP stopped early: {result.message}")
    theta = np.asarray(result.x[:p], dtype=np.float64)
    return theta if np.isfinite(theta).all() else np.zeros(p)


def _coordinate_polish(theta: np.ndarray, data: Dataset, hyper: LwrHyperparams) -> np.ndarray:
    theta = theta.copy()
    current = _reference_objective(theta, data, hyper)
    for half_width in _BOX_WIDTHS:
        for _ in range(_SWEEPS_PER_BOX):
            for j in range(theta.size):
                trial = theta.copy()

                def along(t, j=j, trial=trial):
                    trial[j] = t
                    return _reference_objective(trial, data, hyper)

                center = theta[j]
                res = minimize_scalar(
                    along,
                    bounds=(center - half_width, center + half_width),
                    method="bounded",
                    options={"xatol": max(half_width * 1e-4, 1e-13)},
                )
                if res.fun < current:
                    theta[j] = res.x
                    current = float(res.fun)
    return theta


def reference_solve(data: Dataset, hyper: LwrHyperparams) -> LwrModel:
    """
    Independent desk-scale solver for the LwR primal.

    Args:
        data: Dataset with at most 12 samples and phi.dims + phi_prime.dims + 2 <= 6
        hyper: Hyperparameters

    Returns:
        LwrModel: objective_value is the objective of the returned parameters,
        hence an upper bound on the optimum

    Raises:
        DataError: Size precondition violated
    """
    p = data.phi.dims + data.phi_prime.dims + 2
    if p > MAX_REFERENCE_PARAMS:
        raise DataError(f"reference_solve supports at most {MAX_REFERENCE_PARAMS} parameters, got {p}")
    if data.m > MAX_REFERENCE_SAMPLES:
        raise DataError(f"reference_solve supports at most {MAX_REFERENCE_SAMPLES} samples, got {data.m}")

    start = _cold_start_qp(data, hyper)
    if _reference_objective(start, data, hyper) > _reference_objective(np.zeros(p), data, hyper):
        start = np.zeros(p)
    theta = _coordinate_polish(start, data, hyper)

    d = data.phi.dims
    return LwrModel(
        w=theta[:d],
        b=float(theta[d]),
        u=theta[d + 1:-1],
        b_prime=float(theta[-1]),
        hyper=hyper,
        objective_value=_reference_objective(theta, data, hyper),
    )


class RademacherEstimate(BaseModel):
    """Empirical Rademacher complexity of {x -> w.phi(x) : ||w|| <= norm_bound} on one sample."""
    model_config = ConfigDict(frozen=True)

    mean: float = Field(ge=0)
    std_error: float = Field(ge=0)
    num_draws: int = Field(ge=1)
    norm_bound: float = Field(gt=0)


FeaturesLike = Union[FeatureMatrix, np.ndarray]


def _matrix(features: FeaturesLike) -> np.ndarray:
    values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=np.float64)
    if values.ndim != 2 or values.shape[0] < 1:
        raise DataError(f"Expected a non-empty two-dimensional feature matrix, got shape {values.shape}")
    return values


def _summarize(sups: np.ndarray, norm_bound: float) -> RademacherEstimate:
    n = sups.size
    if np.all(sups == sups[0]):
        # every sign vector gives the same supremum
        return RademacherEstimate(mean=float(sups[0]), std_error=0.0, num_draws=n, norm_bound=norm_bound)
    std_error = float(np.std(sups, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return RademacherEstimate(mean=float(np.mean(sups)), std_error=std_error, num_draws=n, norm_bound=norm_bound)


def _check_bound(norm_bound: float) -> float:
    norm_bound = float(norm_bound)
    if not (np.isfinite(norm_bound) and norm_bound > 0):
        raise ValueError(f"norm_bound must be a positive finite number, got {norm_bound}")
    return norm_bound


def empirical_rademacher(features: FeaturesLike, norm_bound: float, num_draws: int = 1000,
                         seed: int = 0) -> RademacherEstimate:
    """
    Monte-Carlo estimate of (B / m) E_sigma || sum_i sigma_i phi_i ||.

    Args:
        features: Feature matrix (m rows)
        norm_bound: Bound B on ||w||
        num_draws: Number of sign vectors
        seed: Generator seed

    Returns:
        RademacherEstimate
    """
    norm_bound = _check_bound(norm_bound)
    if num_draws < 1:
        raise ValueError(f"num_draws must be at least 1, got {num_draws}")
    values = _matrix(features)
    m = values.shape[0]
    rng = np.random.default_rng(seed)
    sigma = rng.choice(np.array([-1.0, 1.0]), size=(num_draws, m))
    scale = norm_bound / m
    return _summarize(scale * np.linalg.norm(sigma @ values, axis=1), norm_bound)


def exact_empirical_rademacher(features: FeaturesLike, norm_bound: float) -> RademacherEstimate:
    """Same quantity as `empirical_rademacher`, averaged over all 2^m sign vectors (m <= 12)."""
    norm_bound = _check_bound(norm_bound)
    values = _matrix(features)
    m = values.shape[0]
    if m > MAX_EXACT_SAMPLES:
        raise DataError(f"Exact enumeration supports at most {MAX_EXACT_SAMPLES} samples, got {m}")
    sigma = np.array(list(itertools.product((-1.0, 1.0), repeat=m)))
    scale = norm_bound / m
    return _summarize(scale * np.linalg.norm(sigma @ values, axis=1), norm_bound)


class GapReport(BaseModel):
    """Train/test risk gap next to the Rademacher terms of the uniform bound."""
    model_config = ConfigDict(frozen=True)

    c: float
    risk_train: float
    risk_test: float
    gap: float
    excess: float
    complexity_classifier: float
    complexity_rejector: float
    bound_terms: float
    bound_rhs: float
    holds: bool
    note: str


GAP_NOTE = (
    "Diagnostic only: bound_rhs = risk_train + complexity_classifier + (1 + c) * complexity_rejector, "
    "without the confidence term that usually accompanies high-probability bounds; "
    "gap = |risk_test - risk_train|, excess = risk_test - risk_train; 'holds' means excess <= bound_terms "
    "(risk_test <= bound_rhs) and describes this draw only."
)


def _complexity(features: FeatureMatrix, norm: float, num_draws: int, seed: int) -> float:
    if norm == 0.0:
        return 0.0
    return empirical_rademacher(features, norm, num_draws, seed).mean


def generalization_gap_report(model: LwrModel, train: Dataset, test: Dataset,
                              num_draws: int = 1000, seed: int = 0) -> GapReport:
    """
    Compare per-sample train and test risk with the printed uniform bound.

    Raises:
        DimensionMismatchError: Model dims differ from either dataset
    """
    model.check_dims(train)
    model.check_dims(test)
    c = model.hyper.c
    risk_train = evaluate(model.decisions(train), train.labels, c).risk_per_sample
    risk_test = evaluate(model.decisions(test), test.labels, c).risk_per_sample

    complexity_f = _complexity(train.phi, float(np.linalg.norm(model.w)), num_draws, seed)
    complexity_g = _complexity(train.phi_prime, float(np.linalg.norm(model.u)), num_draws, seed)
    bound_terms = complexity_f + (1.0 + c) * complexity_g
    excess = risk_test - risk_train
    return GapReport(
        c=c,
        risk_train=risk_train,
        risk_test=risk_test,
        gap=abs(excess),
        excess=excess,
        complexity_classifier=complexity_f,
        complexity_rejector=complexity_g,
        bound_terms=bound_terms,
        bound_rhs=risk_train + bound_terms,
        holds=excess <= bound_terms,
        note=GAP_NOTE,
    )
