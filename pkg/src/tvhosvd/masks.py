"""Seeded random sampling patterns."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .weights import SamplingPattern


def _draw(prob, shape, rng) -> SamplingPattern:
    # One redraw on an empty result, then give up.
    for _ in range(2):
        mask = rng.random(shape) < prob
        if mask.any():
            return SamplingPattern(mask)
    raise ValueError("sampling produced an empty mask twice; increase p")


def _check_rate(p: float) -> float:
    p = float(p)
    if not 0 < p <= 1:
        raise ValueError(f"sampling rate must be in (0, 1], got {p}")
    return p


def gen_mask_uniform(shape: Sequence[int], p: float, seed=0) -> SamplingPattern:
    """Include every entry independently with probability ``p``."""
    shape = tuple(int(d) for d in shape)
    p = _check_rate(p)
    return _draw(p, shape, np.random.default_rng(seed))


def nonuniform_probabilities(shape: Sequence[int], p: float, skew: float = 5.0) -> np.ndarray:
    """Separable inclusion probabilities with mean ``p``.

    Along each mode the profile ramps linearly from ``q`` to ``skew * q``; the
    product over modes is scaled so its mean is ``p``. If that pushes entries
    above 1 they are clipped and the scale is re-solved by bisection so the
    mean stays at ``p``.
    """
    shape = tuple(int(d) for d in shape)
    p = _check_rate(p)
    if skew < 1:
        raise ValueError(f"skew must be >= 1, got {skew}")
    profiles = []
    for d in shape:
        q = np.linspace(1.0, float(skew), d)
        profiles.append(q / q.mean())
    base = profiles[0]
    for q in profiles[1:]:
        base = np.multiply.outer(base, q)
    prob = p * base
    if prob.max() <= 1.0:
        return prob
    lo, hi = 0.0, 1.0 / base.min()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.minimum(mid * base, 1.0).mean() < p:
            lo = mid
        else:
            hi = mid
    return np.minimum(hi * base, 1.0)


def gen_mask_nonuniform(shape: Sequence[int], p: float, skew: float = 5.0, seed=0) -> SamplingPattern:
    """Independent inclusion with the ramped probabilities above.

    With ``skew == 1`` this draws exactly the same mask as
    :func:`gen_mask_uniform` for the same seed.
    """
    shape = tuple(int(d) for d in shape)
    prob = nonuniform_probabilities(shape, p, skew)
    return _draw(prob, shape, np.random.default_rng(seed))
