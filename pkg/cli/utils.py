"""
CLI Utility Functions
"""

import json
import logging
import math
import os
import tempfile

import numpy as np
import pandas as pd

from core.errors import InsufficientData

logger = logging.getLogger(__name__)


def ensure_directory_exists(directory_path):
    """Ensure a directory exists, create if necessary."""
    os.makedirs(directory_path, exist_ok=True)
    return directory_path


def atomic_write_text(path, text):
    """Write text to path through a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    ensure_directory_exists(directory)
    fd, tmp_path = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.debug(f"Wrote {path}")


def to_jsonable(value):
    """Convert numpy scalars, complex numbers and tables to plain JSON types."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, pd.DataFrame):
        return [to_jsonable(row) for row in value.to_dict(orient='records')]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path, payload):
    """Deterministic, atomic JSON dump."""
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
    atomic_write_text(path, text + '\n')


def write_csv(path, table):
    """Atomic CSV dump of a DataFrame without the index column."""
    atomic_write_text(path, table.to_csv(index=False, float_format='%.12g'))


def fit_slope(table, x_col, y_col):
    """Ordinary least squares y = slope * x + intercept; returns (slope, intercept, r2).

    ``table`` is a DataFrame or a path to a CSV file.
    """
    if not isinstance(table, pd.DataFrame):
        table = pd.read_csv(table)
    if x_col not in table.columns or y_col not in table.columns:
        raise InsufficientData(f"table lacks columns {x_col!r} and {y_col!r}")

    x = table[x_col].to_numpy(dtype=float)
    y = table[y_col].to_numpy(dtype=float)
    finite = np.isfinite(x) & np.isfinite(y)
    if not finite.all():
        raise InsufficientData(f"non-finite values in columns {x_col!r}/{y_col!r}")
    if len(x) < 2 or np.ptp(x) == 0:
        raise InsufficientData(f"need at least two distinct {x_col!r} values, got {len(x)} rows")

    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    ss_res = float(residual @ residual)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)
