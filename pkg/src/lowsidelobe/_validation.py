"""Input validation helpers.

sklearn's ``check_array`` rejects complex input, so the toolkit carries its
own small set of checks for complex 1-D signals.
"""

import numbers

import numpy as np

from .exceptions import InvalidSizeError


def check_signal(x, name="x", min_length=1, dtype=complex):
    """Return ``x`` as a finite 1-D ndarray of ``dtype``."""
    arr = np.asarray(x)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if np.iscomplexobj(arr) and not np.issubdtype(np.dtype(dtype), np.complexfloating):
        raise TypeError(f"{name} must be real-valued")
    arr = arr.astype(dtype, copy=False)
    if arr.size < min_length:
        raise InvalidSizeError(f"{name} needs at least {min_length} samples, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_count(n, name, minimum=1):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(n).__name__}")
    if n < minimum:
        raise InvalidSizeError(f"{name} must be >= {minimum}, got {n}")
    return int(n)


def check_odd_width(width, n_out):
    width = check_count(width, "mainlobe_width")
    if width % 2 == 0:
        raise InvalidSizeError(f"mainlobe width must be odd, got {width}")
    if width > n_out:
        raise InvalidSizeError(f"mainlobe width {width} exceeds output length {n_out}")
    return width


def check_positive(value, name, strict=True):
    value = float(value)
    if not np.isfinite(value) or value < 0 or (strict and value == 0):
        bound = "> 0" if strict else ">= 0"
        raise ValueError(f"{name} must be finite and {bound}, got {value}")
    return value
