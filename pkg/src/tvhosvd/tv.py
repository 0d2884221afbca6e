"""Tensor completion by total-variation minimization.

Each iteration moves every entry along ``laplacian / |gradient|`` after
soft-thresholding, then resets the observed entries to their data::

    X <- X + h_k * shrink(lap(X) / sqrt(sum_i grad_i(X)^2), lambda)
    X[Omega] <- T[Omega]

The iteration starts from zeros (TVTC) or from any warm start, e.g. the
weighted-HOSVD estimate.

Read as a diffusion step, the update has per-entry coefficient
``h_k / |gradient|``; explicit diffusion on an n-mode grid is stable only while
that coefficient stays at or below ``1 / (2n)``. With ``cfl_clamp`` (the
default) the denominator is floored at ``2 n h_k``, so every update moves an
entry toward a convex combination of its neighbours and the iterates obey a
maximum principle. Without it, entries with a tiny nonzero gradient take
unbounded steps and the iteration can diverge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import as_tensor, check_mode
from .weights import as_pattern


def forward_diff(x: np.ndarray, i: int) -> np.ndarray:
    """Next-minus-current along mode ``i``, zero on the last slab."""
    x = np.asarray(x, dtype=np.float64)
    i = check_mode(i, x.ndim)
    out = np.zeros_like(x)
    if x.shape[i] > 1:
        src = [slice(None)] * x.ndim
        src[i] = slice(0, -1)
        out[tuple(src)] = np.diff(x, axis=i)
    return out


def laplacian(x: np.ndarray) -> np.ndarray:
    """Sum over modes of the interior second difference (zero on boundary slabs)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for i in range(x.ndim):
        d = x.shape[i]
        if d < 3:
            continue
        mid = [slice(None)] * x.ndim
        lo = [slice(None)] * x.ndim
        hi = [slice(None)] * x.ndim
        mid[i], lo[i], hi[i] = slice(1, -1), slice(0, -2), slice(2, None)
        mid, lo, hi = tuple(mid), tuple(lo), tuple(hi)
        out[mid] += x[lo] + x[hi] - 2.0 * x[mid]
    return out


def shrink(x, lam: float):
    """Soft threshold ``sign(x) * max(|x| - lam, 0)``; works on scalars and arrays."""
    if lam < 0:
        raise ValueError(f"threshold must be >= 0, got {lam}")
    out = np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def gradient_magnitude(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    sq = np.zeros_like(x)
    for i in range(x.ndim):
        g = forward_diff(x, i)
        sq += g * g
    return np.sqrt(sq)


def tv_norm(x: np.ndarray) -> float:
    """Isotropic TV: sum over entries of the norm of all forward differences.

    The sum is exactly rounded, so the value does not depend on summation order.
    """
    return math.fsum(gradient_magnitude(x).ravel())


@dataclass(frozen=True)
class TvConfig:
    max_iters: int = 5000
    lam: float = 0.01
    step0: float = 0.1
    schedule: str = "invsqrt"
    converge_tol: float = 1e-4
    eps_grad: float = 1e-12
    cfl_clamp: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not self.step0 > 0:
            raise ValueError("step0 must be > 0")
        if self.schedule not in ("fixed", "invsqrt"):
            raise ValueError(f"schedule must be 'fixed' or 'invsqrt', got {self.schedule!r}")
        if not self.converge_tol > 0:
            raise ValueError("converge_tol must be > 0")
        if self.eps_grad < 0:
            raise ValueError("eps_grad must be >= 0")

    def step(self, k: int) -> float:
        if self.schedule == "fixed":
            return self.step0
        return self.step0 / np.sqrt(k + 1.0)


@dataclass
class CompletionReport:
    """Result of :func:`tv_complete`.

    ``step_deltas[k]`` is ``||X^(k+1) - X^k||_F`` measured after projection and
    ``tv_norms[k]`` is the TV of ``X^(k+1)``.
    """

    recovered: np.ndarray
    iterations: int
    step_deltas: list = field(default_factory=list)
    tv_norms: list = field(default_factory=list)
    converged: bool = False

    @property
    def final_tv(self) -> float:
        return self.tv_norms[-1] if self.tv_norms else tv_norm(self.recovered)


def tv_step(x: np.ndarray, h: float, lam: float, eps_grad: float = 1e-12,
            cfl_clamp: bool = True) -> tuple[np.ndarray, float]:
    """One unprojected update; also returns the TV of ``x`` (a by-product).

    Entries whose gradient magnitude is below ``eps_grad`` do not move.
    """
    mag = gradient_magnitude(x)
    lap = laplacian(x)
    flat = mag < eps_grad
    denom = np.maximum(mag, 2 * x.ndim * h) if cfl_clamp else mag
    ratio = np.divide(lap, denom, out=np.zeros_like(lap), where=~flat)
    return x + h * shrink(ratio, lam), float(mag.sum())


def tv_complete(observations: np.ndarray, omega, init: np.ndarray | None = None,
                cfg: TvConfig | None = None) -> CompletionReport:
    """Complete ``observations`` (known on ``omega``) by projected TV descent.

    ``init`` defaults to zeros; its observed entries are overwritten before
    the first step. Stops when an iteration moves the tensor by less than
    ``cfg.converge_tol`` in Frobenius norm, or after ``cfg.max_iters`` steps.
    Observed entries of the result equal the data exactly.
    """
    cfg = cfg or TvConfig()
    obs = as_tensor(observations)
    omega = as_pattern(omega)
    if omega.shape != obs.shape:
        raise ValueError(f"mask shape {omega.shape} does not match observations {obs.shape}")
    if init is None:
        x = np.zeros_like(obs)
    else:
        x = as_tensor(init)
        if x.shape != obs.shape:
            raise ValueError(f"init shape {x.shape} does not match observations {obs.shape}")
    mask = omega.mask
    data = obs[mask]
    x = x.copy()
    x[mask] = data

    deltas: list[float] = []
    tvs: list[float] = []
    converged = False
    for k in range(cfg.max_iters):
        nxt, tv_cur = tv_step(x, cfg.step(k), cfg.lam, cfg.eps_grad, cfg.cfl_clamp)
        nxt[mask] = data
        if k > 0:
            tvs.append(tv_cur)
        delta = float(np.linalg.norm((nxt - x).ravel()))
        deltas.append(delta)
        x = nxt
        if delta < cfg.converge_tol:
            converged = True
            break
    tvs.append(tv_norm(x))
    return CompletionReport(recovered=x, iterations=len(deltas), step_deltas=deltas,
                            tv_norms=tvs, converged=converged)
