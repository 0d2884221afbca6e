"""Reproducible completion experiments on synthetic Tucker tensors.

For every trial and rank ``r`` the runner draws a Tucker tensor of rank
``(r, ..., r)``, adds Gaussian noise, draws a mask, fits the rank-1 weight and
runs each requested method on the same data, so method comparisons are paired.
Randomness for a ``(trial, r)`` task comes from a seed sequence keyed on
``(seed, trial, r)``; results therefore do not depend on execution order or on
the number of workers.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .bounds import ErrorMetrics, metrics
from .lowrank import NoiseModel, add_noise, generate_tucker, hosvd, hosvd_p, weighted_hosvd
from .masks import gen_mask_nonuniform, gen_mask_uniform
from .tv import TvConfig, tv_complete
from .weights import estimate_weight

log = logging.getLogger(__name__)

METHODS = ("hosvd", "hosvd_p", "whosvd", "tv", "whosvd_tv")
METRIC_FIELDS = ("rse", "rmse", "rel_unweighted", "rel_weighted")


@dataclass(frozen=True)
class ExperimentConfig:
    shape: tuple = (30, 30, 30)
    ranks: tuple = (2, 3, 4, 5)
    sampling: str = "uniform"
    p: float = 0.1
    skew: float = 5.0
    sigma: float = 1e-2
    trials: int = 20
    seed: int = 0
    methods: tuple = ("hosvd", "hosvd_p", "whosvd")
    tv: TvConfig = field(default_factory=TvConfig)
    rescale: bool = False
    workers: int = 1
    output: str = "results.csv"

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(d) for d in self.shape))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not 0 < self.p <= 1:
            raise ValueError(f"p must be in (0, 1], got {self.p}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.sampling not in ("uniform", "nonuniform"):
            raise ValueError(f"sampling must be 'uniform' or 'nonuniform', got {self.sampling!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not self.ranks or not self.shape:
            raise ValueError("shape and ranks must be nonempty")
        for r in self.ranks:
            if not 1 <= r <= min(self.shape):
                raise ValueError(f"rank {r} invalid for shape {self.shape}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ValueError(f"unknown methods {bad}; choose from {METHODS}")


_PARSERS = {
    "shape": lambda v: tuple(int(x) for x in v.split(",")),
    "ranks": lambda v: tuple(int(x) for x in v.split(",")),
    "sampling": str,
    "p": float,
    "skew": float,
    "sigma": float,
    "trials": int,
    "seed": int,
    "methods": lambda v: tuple(x.strip() for x in v.split(",") if x.strip()),
    "rescale": lambda v: {"true": True, "1": True, "false": False, "0": False}[v.lower()],
    "workers": int,
    "output": str,
}
_TV_KEYS = {
    "tv_lambda": ("lam", float),
    "tv_step0": ("step0", float),
    "tv_schedule": ("schedule", lambda v: "invsqrt" if v == "inverse-sqrt" else v),
    "tv_tol": ("converge_tol", float),
    "tv_max_iters": ("max_iters", int),
    "tv_eps_grad": ("eps_grad", float),
}


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    """Parse flat ``key=value`` config text; unknown keys are an error.

    A relative ``output`` path is resolved against ``base_dir`` when given.
    """
    kwargs, tv_kwargs = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ValueError(f"line {lineno}: expected key=value")
        try:
            if key in _PARSERS:
                kwargs[key] = _PARSERS[key](value)
            elif key in _TV_KEYS:
                name, conv = _TV_KEYS[key]
                tv_kwargs[name] = conv(value)
            else:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
        except (KeyError, TypeError) as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    if tv_kwargs:
        kwargs["tv"] = TvConfig(**tv_kwargs)
    if base_dir is not None and "output" in kwargs and not Path(kwargs["output"]).is_absolute():
        kwargs["output"] = str(Path(base_dir) / kwargs["output"])
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


@dataclass
class TrialRecord:
    trial: int
    method: str
    r: int
    metrics: ErrorMetrics | None
    iterations: int | None = None
    wall_time: float = 0.0
    error: str | None = None

    def row(self) -> dict:
        row = {"trial": self.trial, "method": self.method, "r": self.r}
        for name in METRIC_FIELDS:
            row[name] = repr(getattr(self.metrics, name)) if self.metrics else "nan"
        row["iterations"] = "" if self.iterations is None else self.iterations
        row["status"] = "ok" if self.error is None else f"error: {self.error}"
        return row


def _rescale(t: np.ndarray) -> np.ndarray:
    lo, hi = t.min(), t.max()
    return (t - lo) / (hi - lo) if hi > lo else np.zeros_like(t)


def run_trial(cfg: ExperimentConfig, trial: int, r: int) -> list[TrialRecord]:
    """Run every configured method on one freshly drawn problem instance."""
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(trial, r))
    tensor_seq, noise_seq, mask_seq = ss.spawn(3)
    ranks = (r,) * len(cfg.shape)
    try:
        truth = generate_tucker(cfg.shape, ranks, np.random.default_rng(tensor_seq))
        if cfg.rescale:
            truth = _rescale(truth)
        noisy = add_noise(truth, NoiseModel(cfg.sigma, noise_seq))
        if cfg.sampling == "uniform":
            omega = gen_mask_uniform(cfg.shape, cfg.p, np.random.default_rng(mask_seq))
        else:
            omega = gen_mask_nonuniform(cfg.shape, cfg.p, cfg.skew, np.random.default_rng(mask_seq))
        y = np.where(omega.mask, noisy, 0.0)
        w = estimate_weight(omega)
    except Exception as exc:  # noqa: BLE001 -- recorded, the run goes on
        log.warning("trial %d r=%d setup failed: %s", trial, r, exc)
        return [TrialRecord(trial, m, r, None, error=str(exc)) for m in cfg.methods]

    records = []
    whosvd_cache = {}

    def whosvd_estimate():
        if "est" not in whosvd_cache:
            whosvd_cache["est"] = weighted_hosvd(y, omega, w, ranks)
        return whosvd_cache["est"]

    for method in cfg.methods:
        start = time.perf_counter()
        iterations = None
        try:
            if method == "hosvd":
                est = hosvd(y, omega, ranks)
            elif method == "hosvd_p":
                est = hosvd_p(y, omega, ranks)
            elif method == "whosvd":
                est = whosvd_estimate()
            else:
                init = whosvd_estimate() if method == "whosvd_tv" else None
                rep = tv_complete(y, omega, init, cfg.tv)
                est, iterations = rep.recovered, rep.iterations
            rec = TrialRecord(trial, method, r, metrics(est, truth, w), iterations)
        except Exception as exc:  # noqa: BLE001
            log.warning("trial %d r=%d method %s failed: %s", trial, r, method, exc)
            rec = TrialRecord(trial, method, r, None, error=str(exc))
        rec.wall_time = time.perf_counter() - start
        records.append(rec)
    return records


def _run_task(args):
    return run_trial(*args)


def run_trials(cfg: ExperimentConfig) -> list[TrialRecord]:
    tasks = [(cfg, t, r) for t in range(cfg.trials) for r in cfg.ranks]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            batches = list(pool.map(_run_task, tasks))
    else:
        batches = [_run_task(task) for task in tasks]
    order = {m: i for i, m in enumerate(cfg.methods)}
    records = [rec for batch in batches for rec in batch]
    records.sort(key=lambda rec: (rec.trial, order[rec.method], rec.r))
    return records


def summarize(records: Sequence[TrialRecord], cfg: ExperimentConfig) -> list[dict]:
    """Per-(method, r) means over the successful trials."""
    rows = []
    for method in cfg.methods:
        for r in cfg.ranks:
            ok = [rec for rec in records if rec.method == method and rec.r == r and rec.metrics]
            row = {"method": method, "r": r, "trials_ok": len(ok)}
            for name in METRIC_FIELDS:
                vals = [getattr(rec.metrics, name) for rec in ok]
                row[f"mean_{name}"] = repr(float(np.mean(vals))) if vals else "nan"
            its = [rec.iterations for rec in ok if rec.iterations is not None]
            row["mean_iterations"] = repr(float(np.mean(its))) if its else ""
            rows.append(row)
    return rows


def summary_path(output) -> Path:
    out = Path(output)
    return out.with_name(f"{out.stem}_summary{out.suffix or '.csv'}")


def timing_path(output) -> Path:
    out = Path(output)
    return out.with_name(f"{out.stem}_timing{out.suffix or '.csv'}")


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> list[TrialRecord]:
    """Run all trials and (optionally) write the records, summary and timing CSVs.

    The records and summary files are deterministic for a given config; wall
    times go to a separate timing file.
    """
    records = run_trials(cfg)
    if write:
        out = Path(cfg.output)
        _write_csv(out, [rec.row() for rec in records])
        _write_csv(summary_path(out), summarize(records, cfg))
        _write_csv(timing_path(out), [
            {"trial": rec.trial, "method": rec.method, "r": rec.r, "wall_time": f"{rec.wall_time:.6f}"}
            for rec in records
        ])
    return records


def mean_metric(records: Sequence[TrialRecord], method: str, r: int, name: str = "rel_unweighted") -> float:
    vals = [getattr(rec.metrics, name) for rec in records if rec.method == method and rec.r == r and rec.metrics]
    return float(np.mean(vals)) if vals else math.nan


def with_output(cfg: ExperimentConfig, output) -> ExperimentConfig:
    return replace(cfg, output=str(output))
