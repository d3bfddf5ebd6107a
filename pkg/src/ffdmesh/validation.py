"""Input validation helpers shared by the estimator API and the core modules."""

from __future__ import annotations

import numpy as np


def as_points(x, name: str = "points", dim: int = 3) -> np.ndarray:
    """Coerce to a float64 (K, dim) array, rejecting NaN/inf and wrong shapes."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"{name} must have shape (K, {dim}), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_faces(x, n_vertices: int, name: str = "faces") -> np.ndarray:
    """Coerce to an int (F, 3) triangle array with all indices in [0, n_vertices)."""
    arr = np.asarray(x)
    if arr.size == 0:
        arr = arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (F, 3), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.round(arr)):
            raise ValueError(f"{name} must contain integer vertex indices")
        arr = arr.astype(np.int64)
    else:
        arr = arr.astype(np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= n_vertices):
        raise ValueError(
            f"{name} reference vertices outside [0, {n_vertices})"
        )
    return arr


def as_vector(x, length: int, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if arr.shape != (length,):
        raise ValueError(f"{name} must have length {length}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr
