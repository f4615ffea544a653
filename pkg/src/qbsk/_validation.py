"""Input checks shared by the estimator classes."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .operators import OperatorParams


def check_unit_column(X, *, name: str = "X") -> np.ndarray:
    """Return ``X`` as a 1-D float array after checking it is a single column in [0, 1]."""
    arr = check_array(X, ensure_2d=False, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"{name} must have exactly one feature, got {arr.shape[1]}")
        arr = arr[:, 0]
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def check_unit_square(X, *, name: str = "X") -> np.ndarray:
    arr = check_array(X, dtype=float)
    if arr.shape[1] != 2:
        raise ValueError(f"{name} must have exactly two features, got {arr.shape[1]}")
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError(f"{name} must lie in [0, 1]^2")
    return arr


def make_params(est, suffix: str = "") -> OperatorParams:
    """Build ``OperatorParams`` from an estimator's ``n``, ``l``, ``alpha``, ``beta``, ``q`` (plus suffix)."""
    get = lambda k: getattr(est, k + suffix)  # noqa: E731
    return OperatorParams(get("n"), get("l"), get("alpha"), get("beta"), get("q"))
