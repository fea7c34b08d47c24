# cli/train_commands.py
"""
`lwr train`: fit LwR (and optionally the calibrated SVM baseline) on a grid of
(c, lambda, lambda') and keep, per c, the cell with the lowest validation risk.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click
from tqdm import tqdm

from cli.config import common_options, cost_options, load_run_config, training_options
from cli.schemas import CandidateRecord, LwrModelRecord, SvmModelRecord, TrainingOptions, TrainReportRecord, TrainRunConfig
from core.baselines import ThresholdModel, calibrate, train_svm, tune_threshold
from core.evaluation import evaluate
from core.exceptions import CalibrationError, ConvergenceError, DataError
from core.preprocess import DatasetNormalizer
from core.synthetic import SplitSpec, split
from core.trainer import train_with_report
from core.types import Dataset, LwrHyperparams, LwrModel
from utils.file_handler import load_dataset
from utils.logger import log
from utils.run_store import save_json, staged_out_dir

MODELS_DIR = "models"


@dataclass
class TrainingRun:
    """Everything a later evaluation step needs from training."""
    train: Dataset
    validation: Dataset
    normalizer: Optional[DatasetNormalizer]
    lwr_models: Dict[float, LwrModel]
    svm_models: Dict[float, Tuple[ThresholdModel, float]] = field(default_factory=dict)
    report: Optional[TrainReportRecord] = None


def load_training_data(cfg: TrainingOptions) -> Tuple[Dataset, Dataset, str]:
    """
    Training and validation datasets plus a label for where validation came from.

    Returns:
        tuple: (train, validation, "files" | "split" | "train")
    """
    train = load_dataset(cfg.labels, cfg.phi, cfg.phi_prime)
    if cfg.has_validation_files:
        return train, load_dataset(cfg.val_labels, cfg.val_phi, cfg.val_phi_prime), "files"
    if cfg.val_fraction > 0:
        fit_part, held_out = split(train, SplitSpec(fractions=(1.0 - cfg.val_fraction, cfg.val_fraction), seed=cfg.seed))
        return fit_part, held_out, "split"
    log.warning("No validation data given; hyperparameters are selected on training risk")
    return train, train, "train"


def _select(candidates: List[CandidateRecord]) -> int:
    """Index of the lowest validation risk; the first cell wins ties."""
    best = 0
    for i, candidate in enumerate(candidates):
        if candidate.validation_risk < candidates[best].validation_risk:
            best = i
    return best


def train_lwr_grid(train: Dataset, validation: Dataset,
                   cfg: TrainingOptions) -> Tuple[Dict[float, LwrModel], List[CandidateRecord]]:
    """
    Train every (c, lambda, lambda') cell and select per c by validation risk.

    Raises:
        ConvergenceError: A cell did not converge; the message names the cell
    """
    train_cfg = cfg.train_config()
    cells = [(c, lam, lam_prime) for c in cfg.c_list for lam in cfg.lambda_grid for lam_prime in cfg.lambda_prime_grid]
    models: Dict[Tuple[float, float, float], LwrModel] = {}
    candidates: List[CandidateRecord] = []

    for c, lam, lam_prime in tqdm(cells, desc="LwR grid", disable=cfg.quiet, leave=False):
        hyper = LwrHyperparams(c=c, lam=lam, lam_prime=lam_prime)
        try:
            model, report = train_with_report(train, hyper, train_cfg)
        except ConvergenceError as err:
            raise ConvergenceError(
                f"LwR c={c} lambda={lam} lambda'={lam_prime}: {err}",
                best_iterate=err.best_iterate,
                objective=err.objective,
            ) from err
        risk = evaluate(model.decisions(validation), validation.labels, c).risk_per_sample
        models[(c, lam, lam_prime)] = model
        candidates.append(CandidateRecord(
            method="lwr", c=c, lam=lam, lam_prime=lam_prime, objective=report.objective,
            iterations=report.iterations, stop_reason=report.stop_reason, validation_risk=risk,
        ))

    selected: Dict[float, LwrModel] = {}
    for c in cfg.c_list:
        indices = [i for i, cand in enumerate(candidates) if cand.c == c]
        pick = indices[_select([candidates[i] for i in indices])]
        chosen = candidates[pick]
        candidates[pick] = chosen.model_copy(update={"selected": True})
        selected[c] = models[(c, chosen.lam, chosen.lam_prime)]
        log.info(f"Selected LwR for c={c}: lambda={chosen.lam} lambda'={chosen.lam_prime} "
                 f"(validation risk {chosen.validation_risk:.6g})")
    return selected, candidates


def train_svm_grid(train: Dataset, validation: Dataset,
                   cfg: TrainingOptions) -> Tuple[Dict[float, Tuple[ThresholdModel, float]], List[CandidateRecord]]:
    """
    Train the SVM for every lambda, calibrate on validation, tune theta per c and
    select lambda per c by validation risk.

    Returns:
        tuple: ({c: (ThresholdModel, lambda)}, candidate records)
    """
    train_cfg = cfg.train_config()
    models: Dict[Tuple[float, float], ThresholdModel] = {}
    candidates: List[CandidateRecord] = []

    for lam in tqdm(cfg.lambda_grid, desc="SVM grid", disable=cfg.quiet, leave=False):
        try:
            scorer = calibrate(train_svm(train, lam, train_cfg), validation)
        except ConvergenceError as err:
            raise ConvergenceError(f"SVM lambda={lam}: {err}", best_iterate=err.best_iterate,
                                   objective=err.objective) from err
        except CalibrationError as err:
            log.warning(f"Skipping SVM lambda={lam}: {err}")
            continue
        p_plus = scorer.p_plus(validation.phi.values)
        for c in cfg.c_list:
            model = ThresholdModel(theta=tune_threshold(p_plus, validation.labels, c), scorer=scorer)
            risk = evaluate(model.decide_probabilities(p_plus), validation.labels, c).risk_per_sample
            models[(c, lam)] = model
            candidates.append(CandidateRecord(method="svm", c=c, lam=lam, theta=model.theta, validation_risk=risk))

    if not candidates:
        raise DataError("No SVM baseline could be calibrated on the validation data")

    selected: Dict[float, Tuple[ThresholdModel, float]] = {}
    for c in cfg.c_list:
        indices = [i for i, cand in enumerate(candidates) if cand.c == c]
        pick = indices[_select([candidates[i] for i in indices])]
        chosen = candidates[pick]
        candidates[pick] = chosen.model_copy(update={"selected": True})
        selected[c] = (models[(c, chosen.lam)], chosen.lam)
        log.info(f"Selected SVM for c={c}: lambda={chosen.lam} theta={chosen.theta:.6g}")
    return selected, candidates


def model_file_name(kind: str, c: float) -> str:
    return f"{kind}_c{c!r}.json"


def run_training(cfg: TrainingOptions, out_dir: Path) -> TrainingRun:
    """
    Load data, train the grids, then write model files and train_report.json into `out_dir`.

    Nothing is written until every grid has been trained.
    """
    train, validation, source = load_training_data(cfg)
    normalizer = None
    if cfg.normalize:
        normalizer = DatasetNormalizer.fit(train)
        train, validation = normalizer.transform(train), normalizer.transform(validation)

    lwr_models, candidates = train_lwr_grid(train, validation, cfg)
    svm_models: Dict[float, Tuple[ThresholdModel, float]] = {}
    if cfg.baselines:
        svm_models, svm_candidates = train_svm_grid(train, validation, cfg)
        candidates.extend(svm_candidates)

    model_files: List[str] = []
    for c, model in lwr_models.items():
        name = Path(MODELS_DIR) / model_file_name("lwr", c)
        record = LwrModelRecord.from_model(model, normalizer, cfg.lambda_grid, cfg.lambda_prime_grid)
        save_json(out_dir / name, record.model_dump())
        model_files.append(name.as_posix())
    for c, (svm, lam) in svm_models.items():
        name = Path(MODELS_DIR) / model_file_name("svm", c)
        save_json(out_dir / name, SvmModelRecord.from_model(svm, c, lam, normalizer, cfg.lambda_grid).model_dump())
        model_files.append(name.as_posix())

    report = TrainReportRecord(
        lambda_grid=list(cfg.lambda_grid),
        lambda_prime_grid=list(cfg.lambda_prime_grid),
        c_list=list(cfg.c_list),
        validation=source,
        normalize=cfg.normalize,
        candidates=candidates,
        model_files=model_files,
    )
    save_json(out_dir / "train_report.json", report.model_dump())
    return TrainingRun(train, validation, normalizer, lwr_models, svm_models, report)


@click.command("train")
@training_options
@cost_options
@common_options
@click.pass_context
def train_cmd(ctx: click.Context, config_file: Optional[str], **options):
    """Train LwR over the (c, lambda, lambda') grid and write the selected models."""
    cfg = load_run_config(ctx, TrainRunConfig, config_file, options)
    with staged_out_dir(cfg.out_dir) as stage:
        run = run_training(cfg, stage)
    click.echo(f"Trained {len(run.report.candidates)} candidates; wrote {len(run.report.model_files)} model files "
               f"to {cfg.out_dir}")
