"""Argument checks shared by the estimator wrappers and the command line."""

from __future__ import annotations

import math

import numpy as np


def check_finite(name: str, value) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return v


def check_positive(name: str, value) -> float:
    v = check_finite(name, value)
    if v <= 0:
        raise ValueError(f"{name} must be positive, got {value!r}")
    return v


def as_levels(t_grid) -> np.ndarray:
    """1-D float array of distinct, finite levels."""
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("at least one level is required")
    if not np.all(np.isfinite(t)):
        raise ValueError("levels must be finite")
    if np.unique(t).size != t.size:
        raise ValueError("levels must be distinct")
    return t


def as_radii(X) -> np.ndarray:
    """Radii from an ``(n,)``/``(n, 1)`` array of radii or ``(n, 4)`` points."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and X.shape[1] == 4:
        r = np.sqrt(np.sum(X * X, axis=1))
    elif X.ndim == 1 or (X.ndim == 2 and X.shape[1] == 1):
        r = X.ravel()
    else:
        raise ValueError(f"expected radii (n,) / (n, 1) or points (n, 4), got shape {X.shape}")
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise ValueError("radii must be positive and finite")
    return r


def parse_levels(text: str) -> np.ndarray:
    """``"a:b:n"`` (inclusive linspace) or a comma list."""
    text = text.strip()
    if ":" in text:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    return as_levels([float(v) for v in text.split(",") if v.strip()])
