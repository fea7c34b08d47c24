# cli/eval_commands.py
"""
`lwr eval` and `lwr sweep`: risk, selective accuracy and rejection rate per
method and per c, written as a plot-ready curve table.
"""
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Union

import click

from cli.config import common_options, cost_options, external_probability_options, load_run_config, training_options
from cli.schemas import EvalRunConfig, LwrModelRecord, SvmModelRecord, SweepRunConfig
from cli.train_commands import run_training
from core.baselines import threshold_decide_many, tune_threshold
from core.evaluation import CurveRow, EvalReport, evaluate, tradeoff_curve
from core.exceptions import DataError
from core.reference import generalization_gap_report
from core.types import Dataset
from utils.file_handler import align_probabilities, load_dataset, load_labels, load_probabilities
from utils.logger import log
from utils.run_store import load_json, save_json, staged_out_dir, write_curve

ModelRecord = Union[LwrModelRecord, SvmModelRecord]
METHOD_ORDER = ("lwr", "svm", "external")
CURVE_FILE = "curve.csv"
EVAL_REPORT_FILE = "eval_report.json"


def load_model_records(model_dir: Path) -> List[ModelRecord]:
    """
    Read every model file in `model_dir` (sorted by name).

    Raises:
        DataError: No model files, or a file of unknown kind
    """
    records: List[ModelRecord] = []
    for path in sorted(Path(model_dir).glob("*.json")):
        payload = load_json(path)
        kind = payload.get("kind")
        if kind == "lwr":
            records.append(LwrModelRecord.model_validate(payload))
        elif kind == "svm":
            records.append(SvmModelRecord.model_validate(payload))
        else:
            raise DataError(f"{path}: unknown model kind '{kind}'")
    if not records:
        raise DataError(f"No model files found in {model_dir}")
    return records


def evaluate_record(record: ModelRecord, test: Dataset) -> EvalReport:
    """Apply the record's stored normalization, then evaluate it on `test`."""
    normalizer = record.to_normalizer()
    data = normalizer.transform(test) if normalizer is not None else test
    decisions = record.to_model().decisions(data)
    return evaluate(decisions, data.labels, record.c)


def evaluate_external(test_table: Mapping[str, float], val_table: Mapping[str, float], val_ids: Sequence[str],
                      val_labels, test: Dataset, c_list: Sequence[float]) -> List[EvalReport]:
    """Threshold rule over external probabilities, theta tuned per c on the validation table."""
    val_p = align_probabilities(val_table, val_ids)
    test_p = align_probabilities(test_table, test.sample_ids)
    reports = []
    for c in c_list:
        theta = tune_threshold(val_p, val_labels, c)
        reports.append(evaluate(threshold_decide_many(test_p, theta), test.labels, c))
        log.info(f"External probabilities at c={c}: theta={theta:.6g}")
    return reports


def _summary(report: EvalReport) -> Dict[str, object]:
    return report.model_dump(exclude={"decisions"})


def write_evaluation(out_dir: Path, reports: Mapping[str, List[EvalReport]],
                     extra: Optional[Dict[str, object]] = None) -> List[CurveRow]:
    """Write curve.csv and eval_report.json; methods in METHOD_ORDER, rows sorted by c."""
    rows: List[CurveRow] = []
    payload: Dict[str, object] = {}
    for method in METHOD_ORDER:
        if reports.get(method):
            rows.extend(tradeoff_curve(reports[method], method=method))
            payload[method] = [_summary(r) for r in sorted(reports[method], key=lambda r: r.c)]
    if extra:
        payload.update(extra)
    write_curve(out_dir / CURVE_FILE, rows)
    save_json(out_dir / EVAL_REPORT_FILE, payload)
    return rows


def _grid_summary(records: Sequence[ModelRecord]) -> Dict[str, object]:
    """The regularization grids and the selected cell of every model file."""
    return {
        "lambda_grid": sorted({lam for r in records for lam in r.lambda_grid}),
        "lambda_prime_grid": sorted({lam for r in records for lam in r.lambda_prime_grid}),
        "selected": [
            {"method": r.kind, "c": r.c, "lam": r.lam, "lam_prime": r.lam_prime}
            for r in sorted(records, key=lambda r: (METHOD_ORDER.index(r.kind), r.c))
        ],
    }


def run_eval(cfg: EvalRunConfig, out_dir: Path) -> List[CurveRow]:
    """Evaluate everything `cfg` names and write the curve and report into `out_dir`."""
    test = load_dataset(cfg.labels, cfg.phi, cfg.phi_prime)
    reports: Dict[str, List[EvalReport]] = {method: [] for method in METHOD_ORDER}
    extra: Dict[str, object] = {}
    if cfg.model_dir is not None:
        records = load_model_records(cfg.model_dir)
        for record in records:
            reports[record.kind].append(evaluate_record(record, test))
        extra = _grid_summary(records)
    if cfg.probabilities is not None:
        val_ids, val_labels = load_labels(cfg.val_labels)
        reports["external"] = evaluate_external(
            load_probabilities(cfg.probabilities), load_probabilities(cfg.val_probabilities),
            val_ids, val_labels, test, cfg.c_list,
        )
    return write_evaluation(out_dir, reports, extra)


def run_sweep(cfg: SweepRunConfig, out_dir: Path) -> List[CurveRow]:
    """Train on the grid, then evaluate every selected model and report the generalization gap."""
    test = load_dataset(cfg.test_labels, cfg.test_phi, cfg.test_phi_prime)
    run = run_training(cfg, out_dir)
    if run.normalizer is not None:
        test = run.normalizer.transform(test)

    reports: Dict[str, List[EvalReport]] = {method: [] for method in METHOD_ORDER}
    gaps = []
    for c, model in sorted(run.lwr_models.items()):
        reports["lwr"].append(evaluate(model.decisions(test), test.labels, c))
        gaps.append(generalization_gap_report(model, run.train, test, cfg.num_draws, cfg.seed).model_dump())
    for c, (model, _) in sorted(run.svm_models.items()):
        reports["svm"].append(evaluate(model.decisions(test), test.labels, c))
    if cfg.probabilities is not None:
        reports["external"] = evaluate_external(
            load_probabilities(cfg.probabilities), load_probabilities(cfg.val_probabilities),
            run.validation.sample_ids, run.validation.labels, test, cfg.c_list,
        )

    save_json(out_dir / "gap_report.json", {"lwr": gaps})
    extra = {"lambda_grid": list(cfg.lambda_grid), "lambda_prime_grid": list(cfg.lambda_prime_grid),
             "c_list": list(cfg.c_list)}
    return write_evaluation(out_dir, reports, extra)


@click.command("eval")
@click.option("--labels", "labels", type=str, help="Test label file")
@click.option("--phi", "phi", type=str, help="Test classifier features")
@click.option("--phi-prime", "phi_prime", type=str, help="Test rejector features")
@click.option("--model-dir", "model_dir", type=str, help="Directory of model files written by train")
@click.option("--val-labels", "val_labels", type=str, help="Validation labels for tuning external thresholds")
@external_probability_options
@cost_options
@common_options
@click.pass_context
def eval_cmd(ctx: click.Context, config_file: Optional[str], **options):
    """Evaluate trained models and/or external probabilities on a test set."""
    cfg = load_run_config(ctx, EvalRunConfig, config_file, options)
    with staged_out_dir(cfg.out_dir) as stage:
        rows = run_eval(cfg, stage)
    click.echo(f"Wrote {len(rows)} curve rows to {Path(cfg.out_dir) / CURVE_FILE}")


@click.command("sweep")
@click.option("--test-labels", "test_labels", type=str, help="Test label file")
@click.option("--test-phi", "test_phi", type=str, help="Test classifier features")
@click.option("--test-phi-prime", "test_phi_prime", type=str, help="Test rejector features")
@click.option("--num-draws", "num_draws", type=int, help="Sign vectors per Rademacher estimate")
@training_options
@external_probability_options
@cost_options
@common_options
@click.pass_context
def sweep_cmd(ctx: click.Context, config_file: Optional[str], **options):
    """Train and evaluate every c; write the tradeoff curve and the gap report."""
    cfg = load_run_config(ctx, SweepRunConfig, config_file, options)
    with staged_out_dir(cfg.out_dir) as stage:
        rows = run_sweep(cfg, stage)
    click.echo(f"Wrote {len(rows)} curve rows to {Path(cfg.out_dir) / CURVE_FILE}")
