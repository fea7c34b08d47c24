# cli/config.py
"""
Merging of --config files and command-line flags into validated run configs.

A config file holds key=value lines (read with python-dotenv); keys are option
names with "_" or "-" separators. Flags given on the command line win over the
file; anything left unset falls back to the schema defaults.
"""
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar

import click
from click.core import ParameterSource
from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError

from core.exceptions import ConfigError

ConfigT = TypeVar("ConfigT", bound=BaseModel)


def read_config_file(path: Optional[str]) -> Dict[str, str]:
    """
    Read a key=value file into a dict with normalized keys.

    Raises:
        ConfigError: Missing file or a key without a value
    """
    if path is None:
        return {}
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {config_path}")
    values: Dict[str, str] = {}
    for key, value in dotenv_values(config_path).items():
        if value is None:
            raise ConfigError(f"{config_path}: key '{key}' has no value")
        values[key.strip().lower().replace("-", "_")] = value
    return values


def _format_error(err: ValidationError) -> str:
    first = err.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ())) or "config"
    return f"{location}: {first.get('msg', 'Invalid value')}"


def load_run_config(ctx: click.Context, schema: Type[ConfigT], config_file: Optional[str],
                    options: Dict[str, Any]) -> ConfigT:
    """
    Build `schema` from the config file overlaid with explicitly given flags.

    Args:
        ctx: Click context of the running command
        schema: Run configuration model
        config_file: Optional key=value file
        options: Parsed command options (name -> value)

    Returns:
        Validated run configuration

    Raises:
        ConfigError: Unknown key or invalid value
    """
    merged: Dict[str, Any] = dict(read_config_file(config_file))
    for name, value in options.items():
        # click defaults are ignored so schema defaults stay authoritative
        if ctx.get_parameter_source(name) in (ParameterSource.COMMANDLINE, ParameterSource.ENVIRONMENT):
            merged[name] = value
    try:
        return schema.model_validate(merged)
    except ValidationError as err:
        raise ConfigError(_format_error(err)) from err


def _apply(options):
    def decorator(func):
        for option in reversed(options):
            func = option(func)
        return func
    return decorator


def common_options(func):
    """--config, --out-dir, --seed and --quiet."""
    return _apply([
        click.option("--config", "config_file", type=str, default=None, help="key=value file; flags override it"),
        click.option("--out-dir", "out_dir", type=str, help="Output directory"),
        click.option("--seed", "seed", type=int, help="Seed for splits and Monte-Carlo draws"),
        click.option("--quiet", "quiet", is_flag=True, help="Hide progress bars"),
    ])(func)


def cost_options(func):
    return click.option("--c-list", "c_list", type=str, help="Comma-separated rejection costs, e.g. 0.1,0.2")(func)


def training_options(func):
    """Training/validation files, regularization grids and solver knobs."""
    return _apply([
        click.option("--labels", "labels", type=str, help="Training label file (id,label)"),
        click.option("--phi", "phi", type=str, help="Training classifier features (id,f1,...)"),
        click.option("--phi-prime", "phi_prime", type=str, help="Training rejector features (id,f1,...)"),
        click.option("--val-labels", "val_labels", type=str, help="Validation label file"),
        click.option("--val-phi", "val_phi", type=str, help="Validation classifier features"),
        click.option("--val-phi-prime", "val_phi_prime", type=str, help="Validation rejector features"),
        click.option("--val-fraction", "val_fraction", type=float, help="Hold out this share of the training files"),
        click.option("--lambda-grid", "lambda_grid", type=str, help="Comma-separated classifier regularization grid"),
        click.option("--lambda-prime-grid", "lambda_prime_grid", type=str,
                     help="Comma-separated rejector regularization grid"),
        click.option("--normalize/--no-normalize", "normalize", help="z-score features with training statistics"),
        click.option("--baselines/--no-baselines", "baselines", help="Also train the calibrated SVM baseline"),
        click.option("--max-iterations", "max_iterations", type=int, help="Subgradient iteration cap"),
        click.option("--tolerance", "tolerance", type=float, help="Relative stopping tolerance"),
        click.option("--initial-step", "initial_step", type=float, help="Initial subgradient step"),
    ])(func)


def external_probability_options(func):
    return _apply([
        click.option("--probabilities", "probabilities", type=str, help="External id,p_plus file for the test set"),
        click.option("--val-probabilities", "val_probabilities", type=str,
                     help="External id,p_plus file for the validation set"),
    ])(func)
