"""Input checks shared by the public functions."""

import numpy as np

from .exceptions import InvalidArgumentError


def as_matrix(X, name="X", allow_empty=False):
    """Return ``X`` as a finite 2-D float64 array or raise InvalidArgumentError."""
    try:
        arr = np.asarray(X, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{name} is not numeric: {exc}") from None
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if not allow_empty and arr.size == 0:
        raise InvalidArgumentError(f"{name} is empty (shape {arr.shape})")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} contains NaN or Inf")
    return arr


def check_same_rows(A, B, a_name="A", b_name="Y"):
    if A.shape[0] != B.shape[0]:
        raise InvalidArgumentError(
            f"{a_name} has {A.shape[0]} rows but {b_name} has {B.shape[0]}"
        )


def check_positive(value, name, allow_zero=False):
    value = float(value)
    ok = value >= 0 if allow_zero else value > 0
    if not (np.isfinite(value) and ok):
        bound = ">= 0" if allow_zero else "> 0"
        raise InvalidArgumentError(f"{name} must be finite and {bound}, got {value}")
    return value
