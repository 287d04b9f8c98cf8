"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np

from .exceptions import ShapeError


def check_positive(value, name, *, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return float(value)


def check_int(value, name, *, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)


def check_map(m, name="map", *, ndim=(2,)):
    """Return ``m`` as a finite float64 array with one of the allowed ranks."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim not in ndim:
        raise ShapeError(f"{name} must have ndim in {ndim}, got shape {arr.shape}")
    if arr.size == 0 or any(s <= 0 for s in arr.shape):
        raise ShapeError(f"{name} must have a strictly positive shape, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_signals(s, name="s"):
    """Accept one image ``(n1, n2)`` or a batch ``(P, n1, n2)``."""
    return check_map(s, name, ndim=(2, 3))


def check_same_shape(a, b, names=("a", "b")):
    if a.shape != b.shape:
        raise ShapeError(
            f"{names[0]} has shape {a.shape} but {names[1]} has shape {b.shape}"
        )


def check_spectra_pair(d_hat, w_hat):
    """``d_hat`` is ``(..., K, N1, N2)``; ``w_hat`` broadcasts against it."""
    if d_hat.ndim < 3 or w_hat.ndim < 3:
        raise ShapeError(
            "spectra must carry a filter axis: expected (..., K, N1, N2), got "
            f"{d_hat.shape} and {w_hat.shape}"
        )
    try:
        np.broadcast_shapes(d_hat.shape, w_hat.shape)
    except ValueError as exc:
        raise ShapeError(
            f"filter spectra {d_hat.shape} do not conform to {w_hat.shape}"
        ) from exc
