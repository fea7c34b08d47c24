"""
Convex objectives of the form

    1/2 * sum_j reg_j * theta_j**2  +  sum_i max_k (slopes[i, k] . theta + offsets[i, k])

Both the LwR problem (pieces: classification, rejection, zero) and the hinge-loss
SVM (pieces: hinge, zero) fit this shape, so value, subgradient and slack
recovery are written once here.
"""
from typing import Tuple

import numpy as np

from core.exceptions import DimensionMismatchError
from core.types import Dataset, LwrHyperparams, LwrModel

# Read-only array with one non-negative slack per sample.
SlackVector = np.ndarray

# Piece order doubles as the subgradient tie rule: the first maximal piece wins.
LWR_PIECES = ("classification", "rejection", "zero")
SVM_PIECES = ("hinge", "zero")


def surrogate_loss(f_val: float, r_val: float, y: int, hyper: LwrHyperparams) -> float:
    """
    Convex LwR surrogate max(1 + alpha/2 (r - y f), c (1 - beta r), 0).

    Args:
        f_val: Classifier score
        r_val: Rejector score
        y: Label (+1 or -1)
        hyper: Hyperparameters providing alpha, beta and c

    Returns:
        float: Surrogate loss value
    """
    classification = 1.0 + (hyper.alpha / 2.0) * (r_val - y * f_val)
    rejection = hyper.c * (1.0 - hyper.beta * r_val)
    return max(classification, rejection, 0.0)


class PiecewiseObjective:
    """Quadratic regularizer plus a sum of per-sample maxima of affine pieces."""

    def __init__(self, reg: np.ndarray, slopes: np.ndarray, offsets: np.ndarray):
        reg = np.asarray(reg, dtype=np.float64)
        slopes = np.asarray(slopes, dtype=np.float64)
        offsets = np.asarray(offsets, dtype=np.float64)
        if slopes.ndim != 3 or offsets.shape != slopes.shape[:2] or reg.shape != slopes.shape[2:]:
            raise DimensionMismatchError(
                f"Inconsistent shapes: reg={reg.shape}, slopes={slopes.shape}, offsets={offsets.shape}"
            )
        for arr in (reg, slopes, offsets):
            arr.setflags(write=False)
        self.reg = reg
        self.slopes = slopes
        self.offsets = offsets

    @property
    def num_samples(self) -> int:
        return self.slopes.shape[0]

    @property
    def num_pieces(self) -> int:
        return self.slopes.shape[1]

    @property
    def num_params(self) -> int:
        return self.slopes.shape[2]

    def piece_values(self, theta: np.ndarray) -> np.ndarray:
        return self.slopes @ theta + self.offsets

    def regularization(self, theta: np.ndarray) -> float:
        return 0.5 * float(np.dot(self.reg * theta, theta))

    def losses(self, theta: np.ndarray) -> np.ndarray:
        """Per-sample loss, i.e. the minimal feasible slack of each sample."""
        return self.piece_values(theta).max(axis=1)

    def value(self, theta: np.ndarray) -> float:
        return self.regularization(theta) + float(self.losses(theta).sum())

    def active_pieces(self, theta: np.ndarray) -> np.ndarray:
        # argmax returns the first maximum, which implements the tie rule
        return self.piece_values(theta).argmax(axis=1)

    def subgradient(self, theta: np.ndarray) -> np.ndarray:
        return self.value_and_subgradient(theta)[1]

    def value_and_subgradient(self, theta: np.ndarray) -> Tuple[float, np.ndarray]:
        pieces = self.piece_values(theta)
        active = pieces.argmax(axis=1)
        value = self.regularization(theta) + float(pieces.max(axis=1).sum())
        picked = self.slopes[np.arange(self.num_samples), active]
        return value, self.reg * theta + picked.sum(axis=0)


def pack_lwr(w: np.ndarray, b: float, u: np.ndarray, b_prime: float) -> np.ndarray:
    return np.concatenate([np.asarray(w, dtype=np.float64), [b], np.asarray(u, dtype=np.float64), [b_prime]])


def unpack_lwr(theta: np.ndarray, phi_dims: int) -> Tuple[np.ndarray, float, np.ndarray, float]:
    d = phi_dims
    return theta[:d].copy(), float(theta[d]), theta[d + 1:-1].copy(), float(theta[-1])


def lwr_objective(data: Dataset, hyper: LwrHyperparams) -> PiecewiseObjective:
    """
    Slack-eliminated LwR primal over theta = (w, b, u, b').

    Args:
        data: Training dataset
        hyper: LwR hyperparameters

    Returns:
        PiecewiseObjective with pieces ordered as LWR_PIECES
    """
    m, d, d_prime = data.m, data.phi.dims, data.phi_prime.dims
    p = d + d_prime + 2
    y = data.labels.astype(np.float64)
    half_alpha = hyper.alpha / 2.0
    c_beta = hyper.c * hyper.beta

    slopes = np.zeros((m, len(LWR_PIECES), p))
    offsets = np.zeros((m, len(LWR_PIECES)))

    # 1 + alpha/2 (u.phi' + b' - y (w.phi + b))
    slopes[:, 0, :d] = -half_alpha * y[:, None] * data.phi.values
    slopes[:, 0, d] = -half_alpha * y
    slopes[:, 0, d + 1:d + 1 + d_prime] = half_alpha * data.phi_prime.values
    slopes[:, 0, -1] = half_alpha
    offsets[:, 0] = 1.0

    # c (1 - beta (u.phi' + b'))
    slopes[:, 1, d + 1:d + 1 + d_prime] = -c_beta * data.phi_prime.values
    slopes[:, 1, -1] = -c_beta
    offsets[:, 1] = hyper.c

    reg = np.zeros(p)
    reg[:d] = hyper.lam
    reg[d + 1:d + 1 + d_prime] = hyper.lam_prime
    return PiecewiseObjective(reg, slopes, offsets)


def svm_objective(phi: np.ndarray, labels: np.ndarray, lam: float) -> PiecewiseObjective:
    """Soft-margin linear SVM primal over theta = (w, b) with pieces ordered as SVM_PIECES."""
    phi = np.asarray(phi, dtype=np.float64)
    m, d = phi.shape
    y = np.asarray(labels, dtype=np.float64)

    slopes = np.zeros((m, len(SVM_PIECES), d + 1))
    offsets = np.zeros((m, len(SVM_PIECES)))
    # 1 - y (w.phi + b)
    slopes[:, 0, :d] = -y[:, None] * phi
    slopes[:, 0, d] = -y
    offsets[:, 0] = 1.0

    reg = np.zeros(d + 1)
    reg[:d] = lam
    return PiecewiseObjective(reg, slopes, offsets)


def primal_objective(model: LwrModel, data: Dataset) -> float:
    """Regularized LwR primal with every slack at its minimal feasible value."""
    model.check_dims(data)
    theta = pack_lwr(model.w, model.b, model.u, model.b_prime)
    return lwr_objective(data, model.hyper).value(theta)


def subgradient(model: LwrModel, data: Dataset) -> Tuple[np.ndarray, float, np.ndarray, float]:
    """
    Deterministic subgradient of `primal_objective` at the model's parameters.

    At ties inside a per-sample max the classification piece is preferred over
    the rejection piece, and both over zero.

    Returns:
        tuple: (dw, db, du, db')
    """
    model.check_dims(data)
    theta = pack_lwr(model.w, model.b, model.u, model.b_prime)
    grad = lwr_objective(data, model.hyper).subgradient(theta)
    return unpack_lwr(grad, data.phi.dims)


def recover_slacks(model: LwrModel, data: Dataset) -> SlackVector:
    """Minimal feasible slack xi_i of every sample under the slack-form constraints."""
    model.check_dims(data)
    theta = pack_lwr(model.w, model.b, model.u, model.b_prime)
    xi = lwr_objective(data, model.hyper).losses(theta)
    xi.setflags(write=False)
    return xi


def make_model(w, b: float, u, b_prime: float, hyper: LwrHyperparams, data: Dataset) -> LwrModel:
    """Build an LwrModel whose objective_value is evaluated on `data`."""
    theta = pack_lwr(w, b, u, b_prime)
    expected = data.phi.dims + data.phi_prime.dims + 2
    if theta.size != expected:
        raise DimensionMismatchError(f"Parameter vector has {theta.size} entries, data needs {expected}")
    value = lwr_objective(data, hyper).value(theta)
    return LwrModel(w=w, b=b, u=u, b_prime=b_prime, hyper=hyper, objective_value=value)
