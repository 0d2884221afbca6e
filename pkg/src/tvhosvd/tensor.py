"""Dense n-mode tensors and the multilinear primitives built on them.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 in C order (last
index varying fastest). Mode indices are zero-based, matching numpy axes.

The mode-k unfolding places mode ``k`` along the rows and orders the columns
lexicographically over the remaining modes with the *lowest* remaining mode
varying fastest. For the 3x4x2 tensor with frontal slices

    T[:, :, 0] = [[1, 4, 7, 10], [2, 5, 8, 11], [3, 6, 9, 12]]
    T[:, :, 1] = T[:, :, 0] + 12

this gives ``unfold(T, 0)[0] == [1, 4, 7, 10, 13, 16, 19, 22]``.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

__all__ = [
    "as_tensor",
    "check_mode",
    "check_ranks",
    "unfold",
    "fold",
    "mode_product",
    "outer",
    "hadamard",
    "khatri_rao",
    "pointwise_pow",
    "frobenius_norm",
    "inf_norm",
]


def as_tensor(data, shape: Sequence[int] | None = None) -> np.ndarray:
    """Validate ``data`` as a dense tensor and return it as a float64 array.

    ``shape`` optionally reshapes a flat buffer (C order). Non-finite values,
    zero-order input and empty extents are rejected.
    """
    arr = np.asarray(data, dtype=np.float64)
    if shape is not None:
        shape = tuple(int(d) for d in shape)
        if arr.size != int(np.prod(shape)):
            raise ValueError(f"buffer of length {arr.size} does not match shape {shape}")
        arr = arr.reshape(shape)
    if arr.ndim < 1:
        raise ValueError("tensor order must be at least 1")
    if any(d < 1 for d in arr.shape):
        raise ValueError(f"every extent must be >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains NaN or Inf")
    return np.ascontiguousarray(arr)


def check_mode(k: int, ndim: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise ValueError(f"mode index must be an integer, got {k!r}")
    if not 0 <= k < ndim:
        raise ValueError(f"mode index {k} out of range for order-{ndim} tensor")
    return int(k)


def check_ranks(ranks: Sequence[int], shape: Sequence[int]) -> tuple[int, ...]:
    """Validate a Tucker rank against ``shape``; returns it as a tuple."""
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != len(shape):
        raise ValueError(f"got {len(ranks)} ranks for an order-{len(shape)} tensor")
    for k, (r, d) in enumerate(zip(ranks, shape)):
        if not 1 <= r <= d:
            raise ValueError(f"rank {r} for mode {k} outside [1, {d}]")
    return ranks


def unfold(t: np.ndarray, k: int) -> np.ndarray:
    """Mode-k matricization, shape ``(d_k, prod_{j != k} d_j)``."""
    t = np.asarray(t)
    k = check_mode(k, t.ndim)
    return np.reshape(np.moveaxis(t, k, 0), (t.shape[k], -1), order="F")


def fold(m: np.ndarray, k: int, shape: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold`."""
    m = np.asarray(m)
    shape = tuple(int(d) for d in shape)
    k = check_mode(k, len(shape))
    rest = shape[:k] + shape[k + 1:]
    expected = (shape[k], int(np.prod(rest)))
    if m.ndim != 2 or m.shape != expected:
        raise ValueError(f"matrix of shape {m.shape} cannot fold to {shape} along mode {k}")
    moved = np.reshape(m, (shape[k],) + rest, order="F")
    return np.ascontiguousarray(np.moveaxis(moved, 0, k))


def mode_product(t: np.ndarray, k: int, a: np.ndarray) -> np.ndarray:
    """Mode-k product ``t x_k a`` = fold_k(a @ unfold(t, k))."""
    t = np.asarray(t, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    k = check_mode(k, t.ndim)
    if a.ndim != 2 or a.shape[1] != t.shape[k]:
        raise ValueError(f"matrix with shape {a.shape} cannot act on mode {k} of extent {t.shape[k]}")
    out = np.tensordot(a, t, axes=(1, k))
    return np.ascontiguousarray(np.moveaxis(out, 0, k))


def outer(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Outer product a_1 o a_2 o ... o a_n."""
    vectors = [np.asarray(v, dtype=np.float64).ravel() for v in vectors]
    if not vectors or any(v.size == 0 for v in vectors):
        raise ValueError("outer product needs at least one nonempty vector")
    return reduce(np.multiply.outer, vectors)


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def khatri_rao(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Columnwise Kronecker product; column j is ``kron(a[:, j], b[:, j])``."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"column counts differ: {a.shape} vs {b.shape}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])


def pointwise_pow(t: np.ndarray, alpha: float) -> np.ndarray:
    """Entrywise power. Negative or fractional exponents need positive entries."""
    t = np.asarray(t, dtype=np.float64)
    alpha = float(alpha)
    if (alpha < 0 or not alpha.is_integer()) and np.any(t <= 0):
        raise ValueError(f"exponent {alpha} requires strictly positive entries")
    if alpha == 1.0:
        return t.copy()
    return np.power(t, alpha)


def frobenius_norm(t: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(t, dtype=np.float64).ravel()))


def inf_norm(t: np.ndarray) -> float:
    t = np.asarray(t, dtype=np.float64)
    return float(np.max(np.abs(t))) if t.size else 0.0
