"""
Minimization of piecewise objectives (see core/objective.py).

Stage one is normalized subgradient descent from zero with a diminishing step,
best-iterate tracking and window averaging. Stage two, for problems small enough,
re-solves the slack form as a QP with SLSQP warm-started from the best iterate.
"""
from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize

from core.exceptions import ConvergenceError
from core.objective import PiecewiseObjective
from utils.logger import log


class StepSchedule(BaseModel):
    """Diminishing step rule: initial_step / sqrt(k + 1) or initial_step / (k + 1)."""
    model_config = ConfigDict(frozen=True)

    rule: Literal["inv_sqrt", "inv"] = "inv_sqrt"
    initial_step: float = Field(default=1.0, gt=0, allow_inf_nan=False)

    def step(self, k: int) -> float:
        if self.rule == "inv":
            return self.initial_step / (k + 1.0)
        return self.initial_step / np.sqrt(k + 1.0)


class TrainConfig(BaseModel):
    """
    Stopping and step parameters shared by the LwR trainer and the SVM baseline.

    The window stop compares the best objective with its value `window` iterations
    earlier. The step shrinks like 1/sqrt(k), so late progress is slow and a
    stall of one window can stop the descent a little above the optimum (a few
    tenths of a percent on mid-sized problems). The stop is therefore not applied
    before `min_iterations`, and problems small enough are finished by the QP
    refinement. Tighten `tolerance` or raise `window` when refinement is off.
    """
    model_config = ConfigDict(frozen=True)

    max_iterations: int = Field(default=200_000, ge=1)
    tolerance: float = Field(default=1e-6, gt=0, allow_inf_nan=False)
    step_schedule: StepSchedule = StepSchedule()
    seed: int = Field(default=0, description="Unused by the solver: descent starts from zero and is deterministic")
    window: int = Field(default=50, ge=1)
    min_iterations: int = Field(default=1000, ge=0, description="Iterations before the window stop may fire")
    refine: bool = True
    refine_max_variables: int = Field(default=400, ge=0)


@dataclass(frozen=True)
class SolverResult:
    theta: np.ndarray
    objective: float
    iterations: int
    stop_reason: str
    refined: bool
    trace: Tuple[float, ...]

    @property
    def converged(self) -> bool:
        return self.stop_reason != "max_iterations"


def subgradient_descent(problem: PiecewiseObjective, cfg: TrainConfig,
                        theta0: Optional[np.ndarray] = None) -> SolverResult:
    """
    Normalized subgradient descent with best-iterate tracking.

    Stops when the best objective improved by less than `tolerance` (relative)
    over the last `window` iterations, checked from `min_iterations` on, or when
    a subgradient norm falls below `tolerance`.

    Args:
        problem: Objective to minimize
        cfg: Training configuration
        theta0: Starting point (zeros when omitted)

    Returns:
        SolverResult: best point found; stop_reason is "window", "gradient" or "max_iterations"
    """
    theta = np.zeros(problem.num_params) if theta0 is None else np.array(theta0, dtype=np.float64)
    best_theta = theta.copy()
    best_value = problem.value(theta)
    # best value at every window boundary, non-increasing
    trace = [best_value]
    history = [best_value]
    window_sum = np.zeros_like(theta)
    stop_reason = "max_iterations"
    k = 0
    _, grad = problem.value_and_subgradient(theta)

    while k < cfg.max_iterations:
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm < cfg.tolerance:
            stop_reason = "gradient"
            break

        theta = theta - cfg.step_schedule.step(k) * grad / grad_norm
        k += 1
        value, grad = problem.value_and_subgradient(theta)
        if value < best_value:
            best_value, best_theta = value, theta.copy()
        window_sum += theta

        if k % cfg.window == 0:
            average = window_sum / cfg.window
            window_sum[:] = 0.0
            average_value = problem.value(average)
            if average_value < best_value:
                best_value, best_theta = average_value, average
            trace.append(best_value)

        history.append(best_value)
        if k >= max(cfg.window, cfg.min_iterations):
            previous = history[k - cfg.window]
            if previous - best_value <= cfg.tolerance * max(abs(best_value), 1e-12):
                stop_reason = "window"
                break

    return SolverResult(best_theta, best_value, k, stop_reason, False, tuple(trace))


def refine_qp(problem: PiecewiseObjective, theta0: np.ndarray, max_iterations: int = 1000) -> Optional[np.ndarray]:
    """
    Solve the slack form  min 1/2 theta' R theta + sum xi  s.t.  xi_i >= piece_ik(theta)
    with SLSQP, starting from `theta0` and its minimal feasible slacks.

    Args:
        problem: Objective to minimize
        theta0: Warm start
        max_iterations: SLSQP iteration cap

    Returns:
        np.ndarray or None: parameters found, None when SLSQP returns non-finite values
    """
    p, m, k = problem.num_params, problem.num_samples, problem.num_pieces
    # constraint rows: xi_i - slopes[i, k].theta - offsets[i, k] >= 0
    jac = np.zeros((m * k, p + m))
    jac[:, :p] = -problem.slopes.reshape(m * k, p)
    jac[np.arange(m * k), p + np.repeat(np.arange(m), k)] = 1.0
    rhs = problem.offsets.reshape(m * k)
    reg = problem.reg

    def objective(z):
        theta = z[:p]
        value = 0.5 * float(np.dot(reg * theta, theta)) + float(z[p:].sum())
        grad = np.concatenate([reg * theta, np.ones(m)])
        return value, grad

    z0 = np.concatenate([theta0, problem.losses(theta0)])
    result = minimize(
        objective,
        z0,
        jac=True,
        method="SLSQP",
        constraints=[{"type": "ineq", "fun": lambda z: jac @ z - rhs, "jac": lambda z: jac}],
        options={"maxiter": max_iterations, "ftol": 1e-14},
    )
    if not result.success:
        # the caller compares objectives, so an early stop is still usable
        log.info(f"SLSQP stopped early: {result.message}")
    theta = np.asarray(result.x[:p], dtype=np.float64)
    if not np.isfinite(theta).all():
        return None
    return theta


def minimize_piecewise(problem: PiecewiseObjective, cfg: TrainConfig) -> SolverResult:
    """
    Subgradient descent followed, when the slack form is small enough, by QP refinement.

    Raises:
        ConvergenceError: Neither stage met its stopping rule; carries the best parameters
    """
    result = subgradient_descent(problem, cfg)
    log.info(
        f"Subgradient descent stopped after {result.iterations} iterations "
        f"({result.stop_reason}), objective={result.objective:.10g}"
    )

    num_variables = problem.num_params + problem.num_samples
    if cfg.refine and num_variables <= cfg.refine_max_variables:
        theta = refine_qp(problem, result.theta)
        if theta is not None:
            value = problem.value(theta)
            if value <= result.objective:
                log.info(f"QP refinement improved objective to {value:.12g}")
                return SolverResult(theta, value, result.iterations, "refine", True, result.trace + (value,))
            log.warning(f"QP refinement rejected: objective {value:.12g} > {result.objective:.12g}")

    if not result.converged:
        raise ConvergenceError(
            f"No convergence within {cfg.max_iterations} iterations (best objective {result.objective:.10g})",
            best_iterate=result.theta,
            objective=result.objective,
        )
    return result
