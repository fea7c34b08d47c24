# utils/run_store.py
"""
Persistence of run outputs: model records, reports and curve tables.

Every file is written to a temporary sibling first and moved into place with
os.replace, so a reader never sees a half-written file. JSON uses sorted keys
and carries no timestamps; identical runs produce identical bytes. A command
stages all of its outputs with staged_out_dir, so a failed run leaves its
output directory untouched.
"""
import json
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Sequence, Union

import pandas as pd

from core.evaluation import CurveRow
from core.exceptions import DataError
from utils.file_handler import format_float
from utils.logger import log

PathLike = Union[str, Path]

CURVE_HEADER = ["method", "c", "rejection_rate", "accuracy", "risk_per_sample"]
UNDEFINED_ACCURACY = "NA"


@contextmanager
def staged_out_dir(out_dir: PathLike) -> Iterator[Path]:
    """
    Yield a scratch directory whose files are moved into `out_dir` when the block succeeds.

    If the block raises, the scratch directory is removed and `out_dir` is left
    exactly as it was (not even created).

    Args:
        out_dir: Final output directory

    Yields:
        Path: Scratch directory beside `out_dir`
    """
    target = Path(out_dir)
    target.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{target.name or 'out'}.", dir=target.parent))
    try:
        yield stage
        files = sorted(p for p in stage.rglob("*") if p.is_file())
        for src in files:
            dest = target / src.relative_to(stage)
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(src, dest)
        log.info(f"Moved {len(files)} output files into {target}")
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def atomic_write_text(path: PathLike, text: str) -> Path:
    """
    Write `text` to `path` atomically.

    Args:
        path: Destination file
        text: Content, written as UTF-8 with "\\n" line endings

    Returns:
        Path: The destination
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return path


def save_json(path: PathLike, payload: Dict[str, Any]) -> Path:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
    saved = atomic_write_text(path, text)
    log.info(f"Saved {saved}")
    return saved


def load_json(path: PathLike) -> Dict[str, Any]:
    """
    Read a JSON object written by `save_json`.

    Raises:
        DataError: Missing file or invalid JSON
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"File not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
    except json.JSONDecodeError as err:
        raise DataError(f"{path}: invalid JSON ({err})") from err
    if not isinstance(payload, dict):
        raise DataError(f"{path}: expected a JSON object")
    return payload


def curve_frame(rows: Sequence[CurveRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            [
                row.method,
                format_float(row.c),
                format_float(row.rejection_rate),
                UNDEFINED_ACCURACY if row.accuracy is None else format_float(row.accuracy),
                format_float(row.risk_per_sample),
            ]
            for row in rows
        ],
        columns=CURVE_HEADER,
    )


def write_curve(path: PathLike, rows: Sequence[CurveRow]) -> Path:
    """Write curve rows as `method,c,rejection_rate,accuracy,risk_per_sample`."""
    text = curve_frame(rows).to_csv(index=False, lineterminator="\n")
    saved = atomic_write_text(path, text)
    log.info(f"Wrote {len(rows)} curve rows to {saved}")
    return saved
