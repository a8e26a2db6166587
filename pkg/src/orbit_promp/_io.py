"""CSV helpers shared by the dataset and plan exporters."""
from pathlib import Path

import numpy as np

from .errors import ParameterError

FLOAT_FMT = "%.9g"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    rows = np.asarray(rows, dtype=np.float64)
    np.savetxt(path, rows, fmt=FLOAT_FMT, delimiter=",", header=header, comments="")
    return path


def read_csv(path, expected_cols=None) -> np.ndarray:
    path = Path(path)
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (ValueError, OSError) as exc:
        raise ParameterError(f"unreadable CSV {path}: {exc}") from exc
    if expected_cols is not None and data.shape[1] != expected_cols:
        raise ParameterError(
            f"bad CSV {path}: expected {expected_cols} columns, got {data.shape[1]}"
        )
    return data
