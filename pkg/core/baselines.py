"""
Confidence-threshold baselines.

A linear soft-margin SVM over phi, a sigmoid calibration of its scores, and a
rejection rule that accepts only when the calibrated posterior of one class
exceeds a threshold tuned on validation risk. External probability tables
(e.g. a network trained elsewhere) plug into the same threshold rule.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from core.exceptions import CalibrationError, ConvergenceError, DataError
from core.objective import svm_objective
from core.solver import TrainConfig, minimize_piecewise
from core.types import Dataset, Decision, RejectionCost, check_cost, validate_labels
from utils.logger import log

CALIBRATION_SLOPE_CAP = 1e4
# risks closer than this count as equal when tuning the threshold
_RISK_TIE = 1e-9


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Linear scorer s(x) = w.phi(x) + b."""
    w: np.ndarray
    b: float
    lam: float
    objective_value: float

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64).reshape(-1)
        if not (np.isfinite(w).all() and math.isfinite(float(self.b))):
            raise DataError("Linear model parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    def scores(self, phi: np.ndarray) -> np.ndarray:
        phi = np.asarray(phi, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[1] != self.w.size:
            raise DataError(f"Expected features with {self.w.size} columns, got shape {phi.shape}")
        return phi @ self.w + self.b


def train_svm(data: Dataset, lam: float, cfg: Optional[TrainConfig] = None) -> LinearModel:
    """
    Soft-margin linear SVM on phi: (lam/2)||w||^2 + sum_i max(1 - y_i (w.phi_i + b), 0).

    Args:
        data: Training dataset (phi_prime is ignored)
        lam: Regularization strength, > 0
        cfg: Solver configuration

    Returns:
        LinearModel

    Raises:
        ConvergenceError: best_iterate is the best LinearModel found
    """
    lam = float(lam)
    if not (math.isfinite(lam) and lam > 0):
        raise ValueError(f"lambda must be a positive finite number, got {lam}")
    cfg = cfg or TrainConfig()
    problem = svm_objective(data.phi.values, data.labels, lam)
    d = data.phi.dims
    try:
        result = minimize_piecewise(problem, cfg)
    except ConvergenceError as err:
        theta = err.best_iterate
        best = LinearModel(w=theta[:d], b=float(theta[d]), lam=lam, objective_value=err.objective)
        raise ConvergenceError(str(err), best_iterate=best, objective=err.objective) from err

    log.info(f"Trained SVM lambda={lam}: objective={result.objective:.10g} ({result.stop_reason})")
    return LinearModel(w=result.theta[:d], b=float(result.theta[d]), lam=lam, objective_value=result.objective)


def fit_calibration(scores: Sequence[float], labels: Sequence[int]) -> Tuple[float, float]:
    """
    Maximum-likelihood fit of p(+1|s) = sigmoid(a * s + b).

    The slope is bounded to |a| <= CALIBRATION_SLOPE_CAP so separable inputs
    stay finite.

    Args:
        scores: Real-valued scores
        labels: +1 / -1 labels aligned with scores

    Returns:
        tuple: (cal_a, cal_b)

    Raises:
        CalibrationError: Single-class or non-finite input, or a fit with a < 0
    """
    s = np.asarray(scores, dtype=np.float64)
    try:
        y = validate_labels(labels).astype(np.float64)
    except DataError as err:
        raise CalibrationError(str(err)) from err
    if s.shape != y.shape:
        raise CalibrationError(f"Got {s.size} scores for {y.size} labels")
    if not np.isfinite(s).all():
        raise CalibrationError("Calibration scores must be finite")
    if np.unique(y).size < 2:
        raise CalibrationError("Calibration needs samples of both labels")

    def nll(ab):
        margin = y * (ab[0] * s + ab[1])
        loss = float(np.logaddexp(0.0, -margin).sum())
        weight = -y * expit(-margin)
        return loss, np.array([float(weight @ s), float(weight.sum())])

    result = minimize(
        nll,
        np.zeros(2),
        jac=True,
        method="L-BFGS-B",
        bounds=[(-CALIBRATION_SLOPE_CAP, CALIBRATION_SLOPE_CAP), (None, None)],
        options={"gtol": 1e-10, "ftol": 64 * np.finfo(float).eps, "maxiter": 1000},
    )
    cal_a, cal_b = float(result.x[0]), float(result.x[1])
    if cal_a < 0:
        raise CalibrationError(f"Calibration slope is negative ({cal_a:.6g}); scores and labels disagree in orientation")
    if cal_a >= CALIBRATION_SLOPE_CAP * (1 - 1e-9):
        log.warning(f"Calibration slope reached its cap {CALIBRATION_SLOPE_CAP:g}; scores separate the labels")
    return cal_a, cal_b


@dataclass(frozen=True, eq=False)
class CalibratedLinearModel:
    """Linear scorer with a sigmoid map to p(+1|x)."""
    w: np.ndarray
    b: float
    cal_a: float
    cal_b: float

    def __post_init__(self):
        if float(self.cal_a) < 0:
            raise CalibrationError(f"cal_a must be non-negative, got {self.cal_a}")
        w = np.array(self.w, dtype=np.float64).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "cal_a", float(self.cal_a))
        object.__setattr__(self, "cal_b", float(self.cal_b))

    @classmethod
    def from_linear(cls, model: LinearModel, cal_a: float, cal_b: float) -> "CalibratedLinearModel":
        return cls(w=model.w, b=model.b, cal_a=cal_a, cal_b=cal_b)

    def p_plus(self, phi: np.ndarray) -> np.ndarray:
        phi = np.asarray(phi, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[1] != self.w.size:
            raise DataError(f"Expected features with {self.w.size} columns, got shape {phi.shape}")
        return expit(self.cal_a * (phi @ self.w + self.b) + self.cal_b)


def calibrate(model: LinearModel, data: Dataset) -> CalibratedLinearModel:
    """Fit the sigmoid map of `model` on `data` (typically a validation split)."""
    cal_a, cal_b = fit_calibration(model.scores(data.phi.values), data.labels)
    return CalibratedLinearModel.from_linear(model, cal_a, cal_b)


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.5 <= theta <= 1.0:
        raise ValueError(f"Threshold must lie in [1/2, 1], got {theta}")
    return theta


def _check_probabilities(p_plus) -> np.ndarray:
    p = np.asarray(p_plus, dtype=np.float64)
    if not (np.isfinite(p).all() and np.all((p >= 0) & (p <= 1))):
        raise DataError("Probabilities must lie in [0, 1]")
    return p


def threshold_decide(p_plus: float, theta: float) -> Decision:
    """Accept positive if p > theta, negative if 1 - p > theta, otherwise reject."""
    p = float(_check_probabilities(p_plus))
    theta = _check_theta(theta)
    if p > theta:
        return Decision.ACCEPT_POSITIVE
    if 1.0 - p > theta:
        return Decision.ACCEPT_NEGATIVE
    return Decision.REJECT


def threshold_decide_many(p_plus: Sequence[float], theta: float) -> List[Decision]:
    p = _check_probabilities(p_plus)
    theta = _check_theta(theta)
    codes = np.where(p > theta, 1, np.where(1.0 - p > theta, 2, 0))
    table = (Decision.REJECT, Decision.ACCEPT_POSITIVE, Decision.ACCEPT_NEGATIVE)
    return [table[code] for code in codes.tolist()]


def threshold_candidates(p_plus: Sequence[float]) -> np.ndarray:
    """1/2, midpoints of consecutive distinct confidences max(p, 1 - p), and 1."""
    p = _check_probabilities(p_plus)
    confidence = np.unique(np.maximum(p, 1.0 - p))
    midpoints = confidence[:-1] + (confidence[1:] - confidence[:-1]) / 2.0
    return np.unique(np.concatenate([[0.5], midpoints, [1.0]]))


def tune_threshold(p_plus: Sequence[float], labels: Sequence[int], c) -> float:
    """
    Threshold in [1/2, 1] minimizing validation risk (wrong acceptances + c * rejections).

    Risk is piecewise constant in theta with breakpoints at the observed
    confidences, so scanning `threshold_candidates` is exhaustive. Ties go to
    the smallest theta.

    Args:
        p_plus: Validation probabilities p(+1|x)
        labels: Validation labels
        c: Rejection cost (RejectionCost or float)

    Returns:
        float: Tuned threshold
    """
    p = _check_probabilities(p_plus)
    y = validate_labels(labels)
    if p.shape != y.shape:
        raise DataError(f"Got {p.size} probabilities for {y.size} labels")
    cost = c.value if isinstance(c, RejectionCost) else check_cost(c)

    confidence = np.maximum(p, 1.0 - p)
    predicted = np.where(p > 0.5, 1, -1)
    wrong = (predicted != y).astype(np.int64)

    order = np.argsort(confidence, kind="stable")
    sorted_confidence = confidence[order]
    # wrong_prefix[k]: wrong predictions among the k least confident samples
    wrong_prefix = np.concatenate([[0], np.cumsum(wrong[order])])
    total_wrong = int(wrong_prefix[-1])

    best_theta, best_risk = 0.5, math.inf
    for theta in threshold_candidates(p):
        rejected = int(np.searchsorted(sorted_confidence, theta, side="right"))
        risk = (total_wrong - int(wrong_prefix[rejected])) + cost * rejected
        if risk < best_risk - _RISK_TIE:
            best_theta, best_risk = float(theta), risk
    log.debug(f"Tuned threshold theta={best_theta:.6g} at c={cost} (validation risk {best_risk:.6g})")
    return best_theta


@dataclass(frozen=True, eq=False)
class ThresholdModel:
    """Threshold rule over a calibrated scorer or over externally supplied probabilities."""
    theta: float
    scorer: Optional[CalibratedLinearModel] = None

    def __post_init__(self):
        object.__setattr__(self, "theta", _check_theta(self.theta))

    def decide_probabilities(self, p_plus: Sequence[float]) -> List[Decision]:
        return threshold_decide_many(p_plus, self.theta)

    def decisions(self, data: Dataset) -> List[Decision]:
        if self.scorer is None:
            raise DataError("ThresholdModel without a scorer needs probabilities, use decide_probabilities")
        return self.decide_probabilities(self.scorer.p_plus(data.phi.values))
