"""Input validation helpers shared by the estimators and functional API."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


class DataError(ValueError):
    """Raised when input data violates a structural invariant."""


class NumericalError(ArithmeticError):
    """Raised when a computation leaves its numerically valid domain."""


def check_series(x, name="series", min_length=1, allow_nonfinite=False):
    """Return ``x`` as a 1-d float array, rejecting NaN and short inputs."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        arr = arr.ravel() if 1 in arr.shape else arr
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise DataError(f"{name} needs at least {min_length} observations, got {arr.size}")
    if not allow_nonfinite and not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains NaN or infinite values")
    return arr


def check_matrix(X, name="X", min_rows=1, min_cols=1):
    """2-d finite float array via sklearn's ``check_array``."""
    try:
        arr = check_array(
            X,
            dtype=np.float64,
            ensure_2d=True,
            ensure_min_samples=min_rows,
            ensure_min_features=min_cols,
        )
    except ValueError as exc:
        raise DataError(f"{name}: {exc}") from exc
    return arr


def check_probability(p, name="probability", *, closed_low=False, closed_high=True):
    """Validate a scalar probability in (0, 1] (bounds configurable)."""
    if not isinstance(p, numbers.Real) or not np.isfinite(p):
        raise ValueError(f"{name} must be a finite real number, got {p!r}")
    low_ok = p >= 0 if closed_low else p > 0
    high_ok = p <= 1 if closed_high else p < 1
    if not (low_ok and high_ok):
        lo = "[" if closed_low else "("
        hi = "]" if closed_high else ")"
        raise ValueError(f"{name} must lie in {lo}0, 1{hi}, got {p}")
    return float(p)


def check_positive_int(n, name="n", minimum=1):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral) or n < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {n!r}")
    return int(n)


def check_state(d, name="state"):
    if d not in (0, 1):
        raise ValueError(f"{name} must be 0 or 1, got {d!r}")
    return int(d)


def as_rng(seed):
    """Accept an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
