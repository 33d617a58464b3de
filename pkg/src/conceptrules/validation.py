"""Input validation helpers for the estimator layer."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, NumericError, ShapeError


def check_feature_matrix(x, name: str = "X", n_features: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{name} contains non-finite values")
    if n_features is not None and x.shape[1] != n_features:
        raise ShapeError(f"{name} has {x.shape[1]} features, expected {n_features}")
    return x


def check_binary_matrix(c, name: str = "concepts", n_rows: int | None = None) -> np.ndarray:
    c = np.asarray(c)
    if c.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {c.shape}")
    values = np.unique(c)
    if not np.all(np.isin(values, (0, 1))):
        raise DomainError(f"{name} must be binary, found values {values[:5]}")
    if n_rows is not None and c.shape[0] != n_rows:
        raise ShapeError(f"{name} has {c.shape[0]} rows, expected {n_rows}")
    return c.astype(np.int64)


def check_labels(y, name: str = "y", n_rows: int | None = None) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {y.shape}")
    if n_rows is not None and y.shape[0] != n_rows:
        raise ShapeError(f"{name} has {y.shape[0]} entries, expected {n_rows}")
    if y.size and (np.any(y < 0) or not np.issubdtype(y.dtype, np.integer)):
        y = y.astype(np.int64)
        if np.any(y < 0):
            raise DomainError(f"{name} must hold nonnegative class ids")
    return y.astype(np.int64)


def check_degree_matrix(d, name: str = "degrees") -> np.ndarray:
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {d.shape}")
    if np.any(d < 0.0) or np.any(d > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return d
