# utils/file_handler.py
"""
Delimited text files for LwR datasets.

Formats (comma-separated, one header line):
    label file        id,label           label is +1 or -1
    feature file      id,f1,...,fd
    probability file  id,p_plus          p_plus in [0, 1]

Floats are written in shortest round-trip form, so writing a dataset and
loading it back reproduces every value bit for bit. Error messages name the
offending id or the 1-based line of the file.
"""
import math
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from core.exceptions import DataError
from core.types import Dataset, FeatureMatrix
from utils.logger import log

PathLike = Union[str, Path]

LABEL_HEADER = ["id", "label"]
PROBABILITY_HEADER = ["id", "p_plus"]
# the first data row sits on line 2 of the file
_FIRST_DATA_LINE = 2


def feature_header(dims: int) -> List[str]:
    return ["id"] + [f"f{j}" for j in range(1, dims + 1)]


def _read_table(path: PathLike) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"File not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as err:
        raise DataError(f"{path}: file is empty") from err
    except pd.errors.ParserError as err:
        raise DataError(f"{path}: inconsistent row length ({err})") from err
    if frame.empty:
        raise DataError(f"{path}: no data rows")
    short = frame.isna().any(axis=1).to_numpy()
    if short.any():
        line = int(np.argmax(short)) + _FIRST_DATA_LINE
        raise DataError(f"{path}: line {line} has fewer fields than the header")
    return frame


def _check_ids(path: Path, ids: Sequence[str]) -> Tuple[str, ...]:
    seen: Dict[str, int] = {}
    for i, sample_id in enumerate(ids):
        line = i + _FIRST_DATA_LINE
        if not sample_id:
            raise DataError(f"{path}: line {line} has an empty id")
        if sample_id in seen:
            raise DataError(f"{path}: duplicate id '{sample_id}' on lines {seen[sample_id]} and {line}")
        seen[sample_id] = line
    return tuple(ids)


def _parse_floats(path: Path, ids: Sequence[str], column: pd.Series) -> np.ndarray:
    try:
        return np.array(column.tolist(), dtype=np.float64)
    except ValueError:
        for i, text in enumerate(column.tolist()):
            try:
                float(text)
            except ValueError:
                raise DataError(
                    f"{path}: line {i + _FIRST_DATA_LINE} (id '{ids[i]}'): cannot parse '{text}' as a number"
                ) from None
        raise


def load_labels(path: PathLike) -> Tuple[Tuple[str, ...], np.ndarray]:
    """Read a label file; returns (ids, labels as int8 +1/-1)."""
    path = Path(path)
    frame = _read_table(path)
    if list(frame.columns) != LABEL_HEADER:
        raise DataError(f"{path}: expected header {','.join(LABEL_HEADER)}, got {','.join(frame.columns)}")
    ids = _check_ids(path, frame["id"].tolist())
    labels = np.empty(len(ids), dtype=np.int8)
    for i, text in enumerate(frame["label"].tolist()):
        if text in ("+1", "1"):
            labels[i] = 1
        elif text == "-1":
            labels[i] = -1
        else:
            raise DataError(f"{path}: line {i + _FIRST_DATA_LINE} (id '{ids[i]}'): label must be +1 or -1, got '{text}'")
    return ids, labels


def load_features(path: PathLike) -> FeatureMatrix:
    """Read a feature file into a FeatureMatrix in file order."""
    path = Path(path)
    frame = _read_table(path)
    dims = frame.shape[1] - 1
    if dims < 1 or list(frame.columns) != feature_header(dims):
        raise DataError(f"{path}: expected header id,f1,...,fd, got {','.join(frame.columns)}")
    ids = _check_ids(path, frame["id"].tolist())
    values = np.column_stack([_parse_floats(path, ids, frame[col]) for col in frame.columns[1:]])
    finite = np.isfinite(values).all(axis=1)
    if not finite.all():
        row = int(np.argmin(finite))
        raise DataError(f"{path}: line {row + _FIRST_DATA_LINE} (id '{ids[row]}'): non-finite feature value")
    return FeatureMatrix(values, ids)


def _align(path: Path, features: FeatureMatrix, ids: Tuple[str, ...]) -> FeatureMatrix:
    present = set(features.sample_ids)
    for sample_id in ids:
        if sample_id not in present:
            raise DataError(f"{path}: id '{sample_id}' from the label file is missing")
    if features.rows != len(ids):
        expected = set(ids)
        extra = next(s for s in features.sample_ids if s not in expected)
        raise DataError(f"{path}: id '{extra}' does not appear in the label file")
    return features.reindex(ids)


def load_dataset(label_file: PathLike, phi_file: PathLike, phi_prime_file: PathLike) -> Dataset:
    """
    Load labels and both feature spaces, realigning feature rows to label-file order by id.

    Args:
        label_file: id,label file
        phi_file: Classifier features
        phi_prime_file: Rejector features

    Returns:
        Dataset

    Raises:
        DataError: Missing, duplicate or unknown ids, malformed rows, non-finite values
    """
    ids, labels = load_labels(label_file)
    phi = _align(Path(phi_file), load_features(phi_file), ids)
    phi_prime = _align(Path(phi_prime_file), load_features(phi_prime_file), ids)
    log.info(f"Loaded dataset: m={len(ids)}, phi dims={phi.dims}, phi_prime dims={phi_prime.dims}")
    return Dataset(labels, phi, phi_prime)


def load_probabilities(prob_file: PathLike) -> Dict[str, float]:
    """
    Read an id,p_plus file.

    Returns:
        dict: id -> p(+1|x) in file order

    Raises:
        DataError: Empty file, duplicate id, unparsable or out-of-range probability
    """
    path = Path(prob_file)
    frame = _read_table(path)
    if list(frame.columns) != PROBABILITY_HEADER:
        raise DataError(f"{path}: expected header {','.join(PROBABILITY_HEADER)}, got {','.join(frame.columns)}")
    ids = _check_ids(path, frame["id"].tolist())
    values = _parse_floats(path, ids, frame["p_plus"])
    for i, p in enumerate(values.tolist()):
        if not (0.0 <= p <= 1.0):
            raise DataError(f"{path}: line {i + _FIRST_DATA_LINE} (id '{ids[i]}'): probability {p} is outside [0, 1]")
    return dict(zip(ids, values.tolist()))


def align_probabilities(table: Mapping[str, float], ids: Sequence[str]) -> np.ndarray:
    """Probabilities in the order of `ids`; every id must be present."""
    missing = [sample_id for sample_id in ids if sample_id not in table]
    if missing:
        raise DataError(f"No probability for id '{missing[0]}'")
    return np.array([table[sample_id] for sample_id in ids], dtype=np.float64)


def format_float(value: float) -> str:
    """Shortest decimal string that parses back to the same double."""
    value = float(value)
    if not math.isfinite(value):
        raise DataError(f"Cannot write non-finite value {value}")
    return repr(value)


def _write_frame(frame: pd.DataFrame, path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")


def write_features(features: FeatureMatrix, path: PathLike) -> None:
    columns = feature_header(features.dims)
    frame = pd.DataFrame(
        [[sample_id] + [format_float(v) for v in row] for sample_id, row in zip(features.sample_ids, features.values.tolist())],
        columns=columns,
    )
    _write_frame(frame, path)


def write_dataset(data: Dataset, label_file: PathLike, phi_file: PathLike, phi_prime_file: PathLike) -> None:
    """Write the three dataset files; `load_dataset` reads them back bit-exactly."""
    labels = pd.DataFrame(
        {"id": list(data.sample_ids), "label": ["+1" if y == 1 else "-1" for y in data.labels.tolist()]},
        columns=LABEL_HEADER,
    )
    _write_frame(labels, label_file)
    write_features(data.phi, phi_file)
    write_features(data.phi_prime, phi_prime_file)
    log.info(f"Wrote dataset with {data.m} samples to {Path(label_file).parent}")


def write_probabilities(table: Mapping[str, float], prob_file: PathLike) -> None:
    frame = pd.DataFrame(
        {"id": list(table.keys()), "p_plus": [format_float(p) for p in table.values()]},
        columns=PROBABILITY_HEADER,
    )
    _write_frame(frame, prob_file)
