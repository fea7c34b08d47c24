"""
Risk, selective accuracy and rejection rate for classifiers with a reject option,
plus assembly of (c, rejection rate, accuracy) tradeoff curves.
"""
from typing import List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, field_validator

from core.exceptions import DataError
from core.types import Decision, RejectionCost, check_cost, validate_labels

CostLike = Union[RejectionCost, float]


def _cost_value(c: CostLike) -> float:
    return c.value if isinstance(c, RejectionCost) else check_cost(c)


def _counts(decisions: Sequence[Decision], labels) -> Tuple[int, int, int]:
    """Return (n_samples, n_rejected, n_accepted_wrong)."""
    labels = validate_labels(labels)
    if len(decisions) != len(labels):
        raise DataError(f"Got {len(decisions)} decisions for {len(labels)} labels")
    rejected = 0
    wrong = 0
    for decision, y in zip(decisions, labels.tolist()):
        predicted = decision.predicted_label
        if predicted is None:
            rejected += 1
        elif predicted != y:
            wrong += 1
    return len(decisions), rejected, wrong


def risk_lwr(decisions: Sequence[Decision], labels, c: CostLike) -> float:
    """
    Empirical risk: number of wrong acceptances plus c times the number of rejections.

    Args:
        decisions: Per-sample decisions
        labels: True labels (+1 / -1), aligned with decisions
        c: Rejection cost

    Returns:
        float: Total (unnormalized) risk
    """
    _, rejected, wrong = _counts(decisions, labels)
    return wrong + _cost_value(c) * rejected


def metrics(decisions: Sequence[Decision], labels) -> Tuple[Optional[float], float]:
    """
    Accuracy over non-rejected samples and rejection rate.

    Returns:
        tuple: (accuracy or None when every sample is rejected, rejection_rate)
    """
    if len(decisions) == 0:
        raise DataError("Cannot compute metrics on an empty sample set")
    n, rejected, wrong = _counts(decisions, labels)
    accepted = n - rejected
    accuracy = (accepted - wrong) / accepted if accepted else None
    return accuracy, rejected / n


class EvalReport(BaseModel):
    """Evaluation of one decision sequence at one rejection cost."""
    model_config = ConfigDict(frozen=True)

    c: float
    risk_total: float
    risk_per_sample: float
    accuracy_nonrejected: Optional[float]
    rejection_rate: float
    n_samples: int
    n_rejected: int
    n_accepted_wrong: int
    decisions: List[Decision]

    @field_validator("c")
    @classmethod
    def _cost_in_range(cls, v: float) -> float:
        return check_cost(v)

    @property
    def n_accepted(self) -> int:
        return self.n_samples - self.n_rejected


def evaluate(decisions: Sequence[Decision], labels, c: CostLike) -> EvalReport:
    """Build an EvalReport for `decisions` against `labels` at cost `c`."""
    if len(decisions) == 0:
        raise DataError("Cannot evaluate an empty sample set")
    cost = _cost_value(c)
    n, rejected, wrong = _counts(decisions, labels)
    accepted = n - rejected
    risk_total = wrong + cost * rejected
    return EvalReport(
        c=cost,
        risk_total=risk_total,
        risk_per_sample=risk_total / n,
        accuracy_nonrejected=(accepted - wrong) / accepted if accepted else None,
        rejection_rate=rejected / n,
        n_samples=n,
        n_rejected=rejected,
        n_accepted_wrong=wrong,
        decisions=list(decisions),
    )


class CurveRow(BaseModel):
    """One point of an accuracy / rejection-rate tradeoff curve."""
    model_config = ConfigDict(frozen=True)

    method: str
    c: float
    rejection_rate: float
    accuracy: Optional[float]
    risk_per_sample: float


def tradeoff_curve(method_runs: Sequence[EvalReport], method: str = "lwr") -> List[CurveRow]:
    """
    Rows (c, rejection_rate, accuracy) sorted by c for one method.

    Raises:
        DataError: No runs, or two runs share the same c
    """
    if not method_runs:
        raise DataError("A tradeoff curve needs at least one run")
    seen = set()
    for report in method_runs:
        if report.c in seen:
            raise DataError(f"Duplicate rejection cost c={report.c} makes the curve ambiguous")
        seen.add(report.c)
    return [
        CurveRow(
            method=method,
            c=report.c,
            rejection_rate=report.rejection_rate,
            accuracy=report.accuracy_nonrejected,
            risk_per_sample=report.risk_per_sample,
        )
        for report in sorted(method_runs, key=lambda r: r.c)
    ]
