"""Small input checks shared by the estimators and configs."""
from __future__ import annotations

import math

import numpy as np


def check_probability(value, name: str = "probability") -> float:
    v = float(value)
    if not (0.0 <= v <= 1.0) or math.isnan(v):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return v


def check_nonnegative(value, name: str = "value") -> float:
    v = float(value)
    if v < 0 or math.isnan(v):
        raise ValueError(f"{name} must be non-negative, got {value!r}")
    return v


def check_bits(array, width: int | None = None, name: str = "bits") -> np.ndarray:
    a = np.asarray(array)
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1")
    if width is not None and a.shape[-1] != width:
        raise ValueError(f"{name} must have {width} columns, got {a.shape[-1]}")
    return a.astype(np.uint8)


def check_series(x, p, weight=None, min_points: int = 3):
    """Validate a (x, p, weight) decay series; returns float arrays."""
    x = np.asarray(x, dtype=float).ravel()
    p = np.asarray(p, dtype=float).ravel()
    if x.shape != p.shape:
        raise ValueError("x and p must have the same length")
    if x.size < min_points:
        raise ValueError(f"need at least {min_points} points, got {x.size}")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(p)):
        raise ValueError("x and p must be finite")
    if weight is None:
        w = np.ones_like(p)
    else:
        w = np.asarray(weight, dtype=float).ravel()
        if w.shape != p.shape or np.any(w < 0):
            raise ValueError("weights must be non-negative and match p")
    return x, p, w
