"""Input validation helpers shared by the estimators and the pipeline."""
from __future__ import annotations

import numpy as np

__all__ = ["check_unit_matrix", "check_binary_labels", "check_threshold"]


def check_unit_matrix(x, n_features: int | None = None) -> np.ndarray:
    """Coerce x to a float64 2-d array with all values in [0, 1]."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d array, got ndim={arr.ndim}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"expected a non-empty matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("membership matrix contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("membership values must lie in [0, 1]")
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError(f"expected {n_features} features, got {arr.shape[1]}")
    return arr


def check_binary_labels(y, n_rows: int) -> np.ndarray:
    """Coerce y to a float64 vector of {0, 1} matching n_rows."""
    arr = np.asarray(y, dtype=np.float64).ravel()
    if arr.shape[0] != n_rows:
        raise ValueError(f"expected {n_rows} labels, got {arr.shape[0]}")
    if not np.all(np.isin(arr, (0.0, 1.0))):
        raise ValueError("labels must be binary (0 or 1)")
    return arr


def check_threshold(t: float) -> float:
    """Validate a rule extraction threshold, 0 <= t < 1."""
    t = float(t)
    if not (0.0 <= t < 1.0):
        raise ValueError(f"threshold must satisfy 0 <= t < 1, got {t}")
    return t
