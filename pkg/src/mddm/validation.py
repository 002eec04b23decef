"""Input validation helpers shared across the package."""
from __future__ import annotations

import numpy as np

_FAMILIES = ("haar", "daubechies-4", "daubechies-8")


def check_family(family: str) -> str:
    if family not in _FAMILIES:
        raise ValueError(
            f"unknown wavelet family {family!r}; expected one of {_FAMILIES}"
        )
    return family


def check_positive_int(value, name: str) -> int:
    ivalue = int(value)
    if ivalue != value or ivalue <= 0:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return ivalue


def check_signal(x, name: str = "signal") -> np.ndarray:
    """Coerce to a float array with at least one sample along the last axis."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] == 0:
        raise ValueError(f"{name} must be a non-empty array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_image(x, name: str = "image") -> np.ndarray:
    """Coerce to a float array whose last two axes are the image grid."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim < 2:
        raise ValueError(f"{name} must be at least 2-dimensional")
    if arr.shape[-1] == 0 or arr.shape[-2] == 0:
        raise ValueError(f"{name} has an empty grid axis")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_divisible(n: int, levels: int, name: str) -> None:
    if n % (1 << levels):
        raise ValueError(
            f"{name} length {n} is not divisible by 2^{levels}; "
            "reduce levels or pad the input"
        )


def check_curve_matrix(coeffs, name: str = "coeffs") -> np.ndarray:
    arr = np.asarray(coeffs, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d (series x coefficients) array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr
