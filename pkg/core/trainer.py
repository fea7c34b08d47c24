"""
LwR trainer: joint fitting of the linear classifier (w, b) over phi and the
linear rejector (u, b') over phi_prime by minimizing the regularized surrogate.
"""
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from core.exceptions import ConvergenceError
from core.objective import lwr_objective, unpack_lwr
from core.solver import TrainConfig, minimize_piecewise
from core.types import Dataset, LwrHyperparams, LwrModel
from utils.logger import log


class TrainReport(BaseModel):
    """Bookkeeping of one training run."""
    model_config = ConfigDict(frozen=True)

    objective: float
    iterations: int
    stop_reason: str
    refined: bool
    single_class: bool
    trace: List[float]


def train_with_report(data: Dataset, hyper: LwrHyperparams,
                      cfg: Optional[TrainConfig] = None) -> Tuple[LwrModel, TrainReport]:
    """
    Train an LwR model and return it with its training report.

    Args:
        data: Training dataset
        hyper: Hyperparameters (c, lambda, lambda')
        cfg: Solver configuration (defaults to TrainConfig())

    Returns:
        tuple: (LwrModel, TrainReport)

    Raises:
        ConvergenceError: best_iterate is the best LwrModel found
    """
    cfg = cfg or TrainConfig()
    single_class = data.is_single_class
    if single_class:
        log.warning(f"Training LwR on single-class data (m={data.m}); the model is well-defined but degenerate")

    problem = lwr_objective(data, hyper)
    d = data.phi.dims
    try:
        result = minimize_piecewise(problem, cfg)
    except ConvergenceError as err:
        w, b, u, b_prime = unpack_lwr(err.best_iterate, d)
        best = LwrModel(w=w, b=b, u=u, b_prime=b_prime, hyper=hyper, objective_value=err.objective)
        raise ConvergenceError(str(err), best_iterate=best, objective=err.objective) from err

    w, b, u, b_prime = unpack_lwr(result.theta, d)
    model = LwrModel(w=w, b=b, u=u, b_prime=b_prime, hyper=hyper, objective_value=result.objective)
    report = TrainReport(
        objective=result.objective,
        iterations=result.iterations,
        stop_reason=result.stop_reason,
        refined=result.refined,
        single_class=single_class,
        trace=list(result.trace),
    )
    log.info(
        f"Trained LwR c={hyper.c} lambda={hyper.lam} lambda'={hyper.lam_prime}: "
        f"objective={result.objective:.10g} ({result.stop_reason})"
    )
    return model, report


def train(data: Dataset, hyper: LwrHyperparams, cfg: Optional[TrainConfig] = None) -> LwrModel:
    """Train an LwR model; see `train_with_report`."""
    model, _ = train_with_report(data, hyper, cfg)
    return model
