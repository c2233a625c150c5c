"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

__all__ = [
    "as_adjacency",
    "as_edge_array",
    "check_labels",
    "check_probability_vector",
    "check_probability_matrix",
    "is_permutation",
    "as_permutation",
]


def as_adjacency(x) -> np.ndarray:
    """Validate a dense adjacency matrix: square, binary, zero diagonal."""
    arr = np.asarray(x)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError("adjacency must have at least one vertex")
    vals = np.unique(arr)
    if not np.isin(vals, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if np.any(np.diagonal(arr) != 0):
        raise ValueError("self-loops are not allowed (nonzero diagonal)")
    return arr.astype(np.uint8, copy=False)


def as_edge_array(edges, n: int) -> np.ndarray:
    """Validate an (E, 2) integer edge array against vertex count n.

    Rejects self-loops and out-of-range endpoints. Returns an int64 array;
    the caller is responsible for sorting/deduplication.
    """
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"edges must have shape (E, 2), got {arr.shape}")
    if arr.min() < 0 or arr.max() >= n:
        bad = arr[(arr < 0).any(axis=1) | (arr >= n).any(axis=1)][0]
        raise ValueError(f"vertex index out of range for n={n}: edge {tuple(bad)}")
    if np.any(arr[:, 0] == arr[:, 1]):
        i = int(arr[arr[:, 0] == arr[:, 1]][0, 0])
        raise ValueError(f"self-loop at vertex {i}")
    return arr


def check_labels(labels, n: int, k: int) -> np.ndarray:
    """Validate a node-label vector: length n, integer entries in [0, k)."""
    arr = np.asarray(labels, dtype=np.int64)
    if arr.shape != (n,):
        raise ValueError(f"labels must have shape ({n},), got {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() >= k):
        raise ValueError(f"label out of range [0, {k}): {int(arr.min())}..{int(arr.max())}")
    return arr


def check_probability_vector(p, tol: float = 1e-12) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("probability vector must be 1-D and nonempty")
    if arr.min() <= 0 or arr.max() > 1:
        raise ValueError("probability vector entries must lie in (0, 1]")
    if abs(float(arr.sum()) - 1.0) > tol:
        raise ValueError(f"probability vector must sum to 1 within {tol}, got {arr.sum()!r}")
    return arr


def check_probability_matrix(g) -> np.ndarray:
    arr = np.asarray(g, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"probability matrix must be square, got shape {arr.shape}")
    if arr.min() < 0 or arr.max() > 1:
        raise ValueError("probability matrix entries must lie in [0, 1]")
    return arr


def is_permutation(perm, k: int | None = None) -> bool:
    arr = np.asarray(perm)
    if arr.ndim != 1:
        return False
    size = arr.size if k is None else k
    if arr.size != size:
        return False
    return bool(np.array_equal(np.sort(arr), np.arange(size)))


def as_permutation(perm, k: int | None = None) -> np.ndarray:
    arr = np.asarray(perm, dtype=np.int64)
    if not is_permutation(arr, k):
        raise ValueError(f"not a permutation of 0..{(k if k is not None else arr.size) - 1}: {arr}")
    return arr
