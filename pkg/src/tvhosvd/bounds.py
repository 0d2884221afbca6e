"""Error metrics, recovery-bound evaluators and singular-spectrum diagnostics.

Two error bounds are evaluated for an estimate built from a rank-1 weight
``W`` and a mask ``Omega`` under i.i.d. Gaussian noise of level ``sigma``:

* the general bound
  ``4 sigma mu sqrt(|Omega| ln 2) + 2 ||T||_inf ||W^(1/2) - W^(-1/2) o 1_Omega||_F``
  with ``mu^2 = max_Omega 1/W``, holding with probability ``1 - 2^(-|Omega|/2)``;
* the Tucker-rank bound, which holds only up to an unspecified absolute
  constant. Its two summands are reported separately and never compared
  against an error directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import ConvergenceError
from .tensor import as_tensor, check_mode, check_ranks, frobenius_norm, pointwise_pow, unfold
from .weights import Rank1Weight, as_pattern


@dataclass(frozen=True)
class ErrorMetrics:
    rse: float
    rmse: float
    rel_unweighted: float
    rel_weighted: float


@dataclass(frozen=True)
class Theorem2Terms:
    mu_k: tuple
    spectral_terms: tuple
    noise_term2: float
    signal_term2: float
    prob2_sum: float
    prob2_prod: float


@dataclass(frozen=True)
class BoundReport:
    mu: float
    bound1: float
    prob1: float
    mu_k: tuple = ()
    spectral_terms: tuple = ()
    noise_term2: float = float("nan")
    signal_term2: float = float("nan")
    prob2_sum: float = float("nan")
    prob2_prod: float = float("nan")

    def as_row(self) -> dict:
        row = {"mu": self.mu, "bound1": self.bound1, "prob1": self.prob1}
        row.update({f"mu_{k + 1}": v for k, v in enumerate(self.mu_k)})
        row.update({f"spec_{k + 1}": v for k, v in enumerate(self.spectral_terms)})
        if self.mu_k:
            row.update(noise_term2=self.noise_term2, signal_term2=self.signal_term2,
                       prob2_sum=self.prob2_sum, prob2_prod=self.prob2_prod)
        return row


def metrics(estimate: np.ndarray, truth: np.ndarray, w: Rank1Weight | None = None) -> ErrorMetrics:
    """RSE, RMSE and the unweighted/weighted relative errors of ``estimate``.

    ``rel_weighted`` is 0 when no weight is supplied.
    """
    estimate = as_tensor(estimate)
    truth = as_tensor(truth)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch {estimate.shape} vs {truth.shape}")
    truth_norm = frobenius_norm(truth)
    if truth_norm == 0:
        raise ValueError("relative errors are undefined for a zero reference tensor")
    diff = estimate - truth
    err = frobenius_norm(diff)
    rel = err / truth_norm
    rel_w = 0.0
    if w is not None:
        if w.shape != truth.shape:
            raise ValueError(f"weight shape {w.shape} does not match {truth.shape}")
        sqrt_w = np.sqrt(w.materialize())
        rel_w = frobenius_norm(sqrt_w * diff) / frobenius_norm(sqrt_w * truth)
    return ErrorMetrics(rse=rel, rmse=err / math.sqrt(truth.size), rel_unweighted=rel, rel_weighted=rel_w)


def weighted_error(estimate: np.ndarray, truth: np.ndarray, w: Rank1Weight) -> float:
    """``||W^(1/2) o (truth - estimate)||_F``, the quantity both bounds control."""
    return frobenius_norm(np.sqrt(w.materialize()) * (np.asarray(truth) - np.asarray(estimate)))


def _check(w: Rank1Weight, omega):
    omega = as_pattern(omega)
    if w.shape != omega.shape:
        raise ValueError(f"weight shape {w.shape} does not match mask shape {omega.shape}")
    return omega


def mismatch_tensor(w: Rank1Weight, omega) -> np.ndarray:
    """``W^(-1/2) o 1_Omega - W^(1/2)``; zero when W is exactly the indicator."""
    omega = _check(w, omega)
    wt = w.materialize()
    return pointwise_pow(wt, -0.5) * omega.indicator() - np.sqrt(wt)


def bound_theorem1(w: Rank1Weight, omega, sigma: float, t_inf: float) -> tuple[float, float, float]:
    """Return ``(mu, bound, probability)`` for the general recovery bound."""
    omega = _check(w, omega)
    if sigma < 0 or t_inf < 0:
        raise ValueError("sigma and t_inf must be non-negative")
    wt = w.materialize()
    n_obs = omega.count
    mu = math.sqrt(float(np.max(1.0 / wt[omega.mask]))) if n_obs else 0.0
    noise = 4.0 * sigma * mu * math.sqrt(n_obs * math.log(2.0))
    signal = 2.0 * t_inf * frobenius_norm(mismatch_tensor(w, omega))
    prob = 1.0 - 2.0 ** (-n_obs / 2.0)
    return mu, noise + signal, prob


def spectral_norm(m: np.ndarray, tol: float = 1e-8, max_iters: int = 1000, seed: int = 0) -> float:
    """Largest singular value by power iteration on the smaller Gram matrix.

    Stops when the Rayleigh quotient changes by less than ``tol`` relative;
    raises :class:`ConvergenceError` carrying the last quotient otherwise.
    """
    m = np.asarray(m, dtype=np.float64)
    gram = m @ m.T if m.shape[0] <= m.shape[1] else m.T @ m
    if not np.any(gram):
        return 0.0
    v = np.random.default_rng(seed).standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    rq = float(v @ gram @ v)
    for _ in range(max_iters):
        u = gram @ v
        norm = np.linalg.norm(u)
        if norm == 0:
            return 0.0
        v = u / norm
        new_rq = float(v @ gram @ v)
        if abs(new_rq - rq) <= tol * abs(new_rq):
            return math.sqrt(max(new_rq, 0.0))
        rq = new_rq
    raise ConvergenceError(f"power iteration did not converge in {max_iters} iterations", last_value=rq)


def mu_k_values(w: Rank1Weight, omega) -> tuple[float, ...]:
    """Per-mode ``mu_k``: sqrt of the largest slice sum or fiber sum of ``1_Omega / W``."""
    omega = _check(w, omega)
    inv = omega.indicator() / w.materialize()
    out = []
    for k in range(inv.ndim):
        mat = unfold(inv, k)
        out.append(math.sqrt(max(mat.sum(axis=1).max(), mat.sum(axis=0).max())))
    return tuple(out)


def bound_theorem2_terms(w: Rank1Weight, omega, ranks: Sequence[int], sigma: float, t_inf: float,
                         tol: float = 1e-8, max_iters: int = 1000) -> Theorem2Terms:
    """Noise and signal summands of the Tucker-rank bound (constant omitted)."""
    omega = _check(w, omega)
    dims = omega.shape
    ranks = check_ranks(ranks, dims)
    total = math.prod(dims)
    mu_k = mu_k_values(w, omega)
    diff = mismatch_tensor(w, omega)
    spec = tuple(spectral_norm(unfold(diff, k), tol, max_iters) for k in range(len(dims)))
    log_terms = [math.log(d + total // d) for d in dims]
    noise = sigma * sum(math.sqrt(r * lg) * m for r, lg, m in zip(ranks, log_terms, mu_k))
    signal = t_inf * sum(r * s for r, s in zip(ranks, spec))
    fail = [1.0 / (d + total // d) for d in dims]
    return Theorem2Terms(
        mu_k=mu_k,
        spectral_terms=spec,
        noise_term2=noise,
        signal_term2=signal,
        prob2_sum=1.0 - sum(fail),
        prob2_prod=math.prod(1.0 - f for f in fail),
    )


def bound_report(w: Rank1Weight, omega, sigma: float, t_inf: float,
                 ranks: Sequence[int] | None = None) -> BoundReport:
    mu, b1, p1 = bound_theorem1(w, omega, sigma, t_inf)
    if ranks is None:
        return BoundReport(mu=mu, bound1=b1, prob1=p1)
    t2 = bound_theorem2_terms(w, omega, ranks, sigma, t_inf)
    return BoundReport(mu=mu, bound1=b1, prob1=p1, mu_k=t2.mu_k, spectral_terms=t2.spectral_terms,
                       noise_term2=t2.noise_term2, signal_term2=t2.signal_term2,
                       prob2_sum=t2.prob2_sum, prob2_prod=t2.prob2_prod)


def mode_spectrum(t: np.ndarray, k: int) -> np.ndarray:
    """All singular values of the mode-k unfolding, descending."""
    t = as_tensor(t)
    k = check_mode(k, t.ndim)
    return np.linalg.svd(unfold(t, k), compute_uv=False)
