"""Sampling patterns and the rank-1 weight tensor fitted to them.

The weight ``W = w_1 o ... o w_n`` is the best strictly positive rank-1
approximation of the mask indicator ``1_Omega`` in Frobenius norm, computed by
alternating least squares. Each factor update is the exact minimizer with the
other factors fixed; because the objective separates over the entries of the
updated factor, clipping at the positivity floor keeps every update optimal on
the constrained set, so the residual never increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterator, Sequence

import numpy as np

from .exceptions import ConvergenceError
from .tensor import frobenius_norm, khatri_rao, outer, unfold

WEIGHT_FLOOR = 1e-6


@dataclass(frozen=True, eq=False)
class SamplingPattern:
    """Boolean mask over the index grid of a tensor (``True`` = observed)."""

    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if mask.dtype != bool:
            if not np.all((mask == 0) | (mask == 1)):
                raise ValueError("mask entries must be 0/1 or boolean")
            mask = mask.astype(bool)
        if mask.ndim < 1 or any(d < 1 for d in mask.shape):
            raise ValueError(f"invalid mask shape {mask.shape}")
        mask = np.ascontiguousarray(mask)
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mask.shape

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def rate(self) -> float:
        return self.count / self.mask.size

    def indicator(self) -> np.ndarray:
        """``1_Omega`` as a float tensor."""
        return self.mask.astype(np.float64)

    def indices(self) -> Iterator[tuple[int, ...]]:
        for idx in zip(*np.nonzero(self.mask)):
            yield tuple(int(i) for i in idx)

    @classmethod
    def full(cls, shape: Sequence[int]) -> "SamplingPattern":
        return cls(np.ones(tuple(shape), dtype=bool))


def as_pattern(omega) -> SamplingPattern:
    return omega if isinstance(omega, SamplingPattern) else SamplingPattern(omega)


def require_nonempty(omega: SamplingPattern) -> None:
    if omega.count < 1:
        raise ValueError("sampling pattern is empty")


@dataclass(frozen=True, eq=False)
class Rank1Weight:
    """Strictly positive rank-1 weight tensor stored by its factor vectors.

    ``residuals`` records ``||W - 1_Omega||_F`` after initialization and after
    every ALS sweep when the weight came from :func:`estimate_weight`.
    """

    factors: tuple
    residuals: tuple = field(default=(), compare=False)

    def __post_init__(self):
        factors = tuple(np.array(f, dtype=np.float64).ravel() for f in self.factors)
        if not factors or any(f.size == 0 for f in factors):
            raise ValueError("weight needs at least one nonempty factor")
        for k, f in enumerate(factors):
            if not np.all(np.isfinite(f)) or np.any(f <= 0):
                raise ValueError(f"weight factor {k} must be finite and strictly positive")
            f.flags.writeable = False
        object.__setattr__(self, "factors", factors)
        object.__setattr__(self, "residuals", tuple(float(r) for r in self.residuals))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    def materialize(self) -> np.ndarray:
        return outer(self.factors)

    @classmethod
    def ones(cls, shape: Sequence[int]) -> "Rank1Weight":
        return cls(tuple(np.ones(int(d)) for d in shape))


def weight_residual(omega, w: Rank1Weight) -> float:
    omega = as_pattern(omega)
    return frobenius_norm(w.materialize() - omega.indicator())


def _others_khatri_rao(factors: Sequence[np.ndarray], k: int) -> np.ndarray:
    # Column order of unfold(., k): lowest remaining mode fastest, so the
    # Kronecker chain runs from the highest mode down.
    others = [factors[j][:, None] for j in reversed(range(len(factors))) if j != k]
    if not others:
        return np.ones((1, 1))
    return reduce(khatri_rao, others)


def _rebalance(factors: list[np.ndarray], floor: float) -> list[np.ndarray]:
    """Rescale factors toward equal norms without moving any entry below ``floor``.

    Works in log-scale: the scales ``x_k`` sum to zero (so the product tensor
    is unchanged) and are the closest such point to the equal-norm target that
    satisfies ``x_k >= log(floor / min(w_k))``.
    """
    n = len(factors)
    if n == 1:
        return factors
    log_norms = np.array([np.log(np.linalg.norm(f)) for f in factors])
    target = log_norms.mean() - log_norms
    lower = np.array([np.log(floor) - np.log(f.min()) for f in factors])
    if lower.sum() > 0:
        return factors
    fixed = np.zeros(n, dtype=bool)
    while True:
        free = ~fixed
        if not free.any():
            x = lower
            break
        tau = (target[free].sum() + lower[fixed].sum()) / free.sum()
        x = np.where(fixed, lower, target - tau)
        violated = free & (x < lower)
        if not violated.any():
            break
        fixed |= violated
    return [np.maximum(f * np.exp(s), floor) for f, s in zip(factors, x)]


def als_sweep(omega, current: Rank1Weight, floor: float = WEIGHT_FLOOR) -> Rank1Weight:
    """One rank-1 ALS pass over all modes, followed by rebalancing.

    Raises :class:`ConvergenceError` if every factor other than the one being
    updated sits entirely at the floor.
    """
    omega = as_pattern(omega)
    if current.shape != omega.shape:
        raise ValueError(f"weight shape {current.shape} does not match mask shape {omega.shape}")
    ind = omega.indicator()
    factors = [f.copy() for f in current.factors]
    for k in range(len(factors)):
        others = [factors[j] for j in range(len(factors)) if j != k]
        if others and all(np.all(f <= floor) for f in others):
            raise ConvergenceError(f"degenerate weight: every factor except mode {k} is at the floor")
        kr = _others_khatri_rao(factors, k)
        num = (unfold(ind, k) @ kr).ravel()
        den = float(np.prod([f @ f for f in others])) if others else 1.0
        factors[k] = np.maximum(num / den, floor)
    return Rank1Weight(tuple(_rebalance(factors, floor)))


def estimate_weight(
    omega,
    max_iters: int = 100,
    tol: float = 1e-8,
    init: Rank1Weight | None = None,
    floor: float = WEIGHT_FLOOR,
) -> Rank1Weight:
    """Fit a strictly positive rank-1 weight to the mask by ALS.

    Starts from constant factors whose product is the mean sampling rate
    (unless ``init`` is given) and stops once a sweep improves the residual
    by less than ``tol`` relative, or after ``max_iters`` sweeps.
    """
    omega = as_pattern(omega)
    require_nonempty(omega)
    n = len(omega.shape)
    if init is None:
        c = omega.rate ** (1.0 / n)
        init = Rank1Weight(tuple(np.full(d, max(c, floor)) for d in omega.shape))
    w = init
    res = weight_residual(omega, w)
    history = [res]
    for _ in range(max_iters):
        if res == 0.0:
            break
        w = als_sweep(omega, w, floor)
        new_res = weight_residual(omega, w)
        history.append(new_res)
        improved = res - new_res
        res = new_res
        if improved < tol * history[-2]:
            break
    return Rank1Weight(w.factors, residuals=tuple(history))
