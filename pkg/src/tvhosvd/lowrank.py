"""Truncated SVD, HOSVD and the HOSVD-based completion estimators.

Three estimators share one truncation routine:

* ``hosvd``      -- plain HOSVD of the zero-filled observations,
* ``hosvd_p``    -- HOSVD of the observations scaled by ``1/p``, where ``p`` is
  the global sampling rate,
* ``weighted_hosvd`` -- ``W^(-1/2) o HOSVD(W^(-1/2) o Y_Omega)`` for a strictly
  positive rank-1 weight ``W`` fitted to the mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tensor import as_tensor, check_ranks, mode_product, pointwise_pow, unfold
from .weights import WEIGHT_FLOOR, Rank1Weight, as_pattern, require_nonempty

# Above this many rows the Gram matrix is too large to form; switch to
# randomized subspace iteration.
GRAM_MAX_ROWS = 512
OVERSAMPLE = 8
POWER_ITERS = 4


@dataclass(frozen=True)
class HosvdFactors:
    """Orthonormal mode bases, one ``d_k x r_k`` matrix per mode."""

    bases: tuple

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(u.shape[1] for u in self.bases)


@dataclass(frozen=True)
class NoiseModel:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError(f"noise sigma must be >= 0, got {self.sigma}")


def _fix_signs(u: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry of each column is made positive (first one on ties).
    idx = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs


def _top_eigvecs(gram: np.ndarray, r: int) -> np.ndarray:
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(-evals, kind="stable")[:r]
    return evecs[:, order]


def _randomized_left(m: np.ndarray, r: int, seed: int = 0) -> np.ndarray:
    rows, cols = m.shape
    width = min(r + OVERSAMPLE, rows, cols)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(m @ rng.standard_normal((cols, width)))
    for _ in range(POWER_ITERS):
        z, _ = np.linalg.qr(m.T @ q)
        q, _ = np.linalg.qr(m @ z)
    b = q.T @ m
    return q @ _top_eigvecs(b @ b.T, r)


def truncated_left_singular(m: np.ndarray, r: int, method: str = "auto") -> np.ndarray:
    """Leading ``r`` left singular vectors of ``m`` as orthonormal columns.

    ``method`` is ``"gram"`` (eigendecomposition of ``m m^T``), ``"randomized"``
    (subspace iteration), or ``"auto"`` to pick by the row count.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    r = int(r)
    if not 1 <= r <= min(m.shape):
        raise ValueError(f"rank {r} outside [1, {min(m.shape)}] for matrix of shape {m.shape}")
    if method == "auto":
        method = "gram" if m.shape[0] <= GRAM_MAX_ROWS else "randomized"
    if method == "gram":
        u = _top_eigvecs(m @ m.T, r)
    elif method == "randomized":
        u = _randomized_left(m, r)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _fix_signs(u)


def _mode_basis(m: np.ndarray, r: int) -> np.ndarray:
    if r <= min(m.shape):
        return truncated_left_singular(m, r)
    # r_k <= d_k can still exceed the column count; the column space then sits
    # inside the top-r Gram eigenspace, so the projector keeps m unchanged.
    return _fix_signs(_top_eigvecs(m @ m.T, r))


def hosvd_truncate(y: np.ndarray, ranks: Sequence[int]) -> tuple[np.ndarray, HosvdFactors]:
    """Classic (non-sequential) truncated HOSVD.

    Every mode basis is computed from ``y`` itself; the result is
    ``y x_1 U_1 U_1^T ... x_n U_n U_n^T``. Modes kept at full rank are left
    untouched since their projector is the identity.
    """
    y = as_tensor(y)
    ranks = check_ranks(ranks, y.shape)
    bases = tuple(_mode_basis(unfold(y, k), r) for k, r in enumerate(ranks))
    out = y
    for k, u in enumerate(bases):
        if u.shape[1] < y.shape[k]:
            out = mode_product(out, k, u @ u.T)
    return out, HosvdFactors(bases)


def _observed(y_omega, omega) -> tuple[np.ndarray, object]:
    y = as_tensor(y_omega)
    omega = as_pattern(omega)
    if omega.shape != y.shape:
        raise ValueError(f"mask shape {omega.shape} does not match data shape {y.shape}")
    return np.where(omega.mask, y, 0.0), omega


def hosvd(y_omega: np.ndarray, omega, ranks: Sequence[int]) -> np.ndarray:
    """Plain HOSVD estimate of the zero-filled observations."""
    y, _ = _observed(y_omega, omega)
    return hosvd_truncate(y, ranks)[0]


def hosvd_p(y_omega: np.ndarray, omega, ranks: Sequence[int]) -> np.ndarray:
    """HOSVD of ``Y_Omega / p`` with ``p = |Omega| / prod(d)``."""
    y, omega = _observed(y_omega, omega)
    require_nonempty(omega)
    return hosvd_truncate(y / omega.rate, ranks)[0]


def weighted_hosvd(y_omega: np.ndarray, omega, w: Rank1Weight, ranks: Sequence[int]) -> np.ndarray:
    """``W^(-1/2) o HOSVD(W^(-1/2) o Y_Omega)``."""
    y, omega = _observed(y_omega, omega)
    if w.shape != y.shape:
        raise ValueError(f"weight shape {w.shape} does not match data shape {y.shape}")
    if any(np.any(f < WEIGHT_FLOOR) for f in w.factors):
        raise ValueError(f"weight factor entries fall below the positivity floor {WEIGHT_FLOOR}")
    inv_sqrt = pointwise_pow(w.materialize(), -0.5)
    projected, _ = hosvd_truncate(inv_sqrt * y, ranks)
    return inv_sqrt * projected


def generate_tucker(shape: Sequence[int], ranks: Sequence[int], seed=0) -> np.ndarray:
    """Random Tucker tensor ``C x_1 U_1 ... x_n U_n``.

    The core is i.i.d. standard normal; each factor is a standard normal
    ``d_k x r_k`` matrix orthonormalized by QR.
    """
    shape = tuple(int(d) for d in shape)
    ranks = check_ranks(ranks, shape)
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(ranks)
    for k, (d, r) in enumerate(zip(shape, ranks)):
        u, _ = np.linalg.qr(rng.standard_normal((d, r)))
        t = mode_product(t, k, u)
    return t


def add_noise(t: np.ndarray, noise: NoiseModel) -> np.ndarray:
    t = as_tensor(t)
    if noise.sigma == 0:
        return t.copy()
    rng = np.random.default_rng(noise.seed)
    return t + noise.sigma * rng.standard_normal(t.shape)
