"""Tensor completion tools: weighted HOSVD, TV completion, bounds and experiments.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .bounds import bound_report, metrics
from .exceptions import ConvergenceError
from .experiment import load_config, run_experiment
from .frames import FrameMeta, ingest_frames
from .lowrank import NoiseModel, add_noise, generate_tucker, hosvd, hosvd_p, weighted_hosvd
from .masks import gen_mask_nonuniform, gen_mask_uniform
from .tv import TvConfig, tv_complete
from .weights import Rank1Weight, SamplingPattern, estimate_weight

EXIT_INVALID = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("tvhosvd")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _write_rows(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _load_weight(prefix, shape) -> Rank1Weight:
    w = Rank1Weight(tuple(io.read_factors(prefix)))
    if w.shape != tuple(shape):
        raise ValueError(f"weight factors have shape {w.shape}, expected {tuple(shape)}")
    return w


def cmd_gen_synthetic(args) -> None:
    tensor_seq, noise_seq = np.random.SeedSequence(args.seed).spawn(2)
    truth = generate_tucker(args.shape, args.ranks, np.random.default_rng(tensor_seq))
    io.write_tensor(args.out, add_noise(truth, NoiseModel(args.sigma, noise_seq)))
    if args.truth_out:
        io.write_tensor(args.truth_out, truth)


def cmd_gen_mask(args) -> None:
    if args.mode == "uniform":
        omega = gen_mask_uniform(args.shape, args.p, args.seed)
    else:
        omega = gen_mask_nonuniform(args.shape, args.p, args.skew, args.seed)
    io.write_mask(args.out, omega.mask)


def cmd_estimate_weight(args) -> None:
    omega = SamplingPattern(io.read_mask(args.mask))
    w = estimate_weight(omega, max_iters=args.iters, tol=args.tol)
    io.write_tensor(args.out, w.materialize())
    io.write_factors(args.out, w.factors)
    log.info("weight residual %.6g after %d sweeps", w.residuals[-1], len(w.residuals) - 1)


def cmd_complete(args) -> None:
    data = io.read_tensor(args.data)
    omega = SamplingPattern(io.read_mask(args.mask))
    if omega.shape != data.shape:
        raise ValueError(f"mask shape {omega.shape} does not match data shape {data.shape}")
    method = args.method
    needs_ranks = method in ("hosvd", "hosvd_p", "whosvd", "whosvd_tv")
    if needs_ranks and args.ranks is None:
        raise ValueError(f"--ranks is required for method {method}")

    def weight():
        if args.weight:
            return _load_weight(args.weight, data.shape)
        return estimate_weight(omega)

    if method == "hosvd":
        est = hosvd(data, omega, args.ranks)
    elif method == "hosvd_p":
        est = hosvd_p(data, omega, args.ranks)
    elif method == "whosvd":
        est = weighted_hosvd(data, omega, weight(), args.ranks)
    else:
        cfg = TvConfig(max_iters=args.max_iters, lam=args.lam, step0=args.step0,
                       schedule=args.schedule, converge_tol=args.tol)
        init = weighted_hosvd(data, omega, weight(), args.ranks) if method == "whosvd_tv" else None
        rep = tv_complete(data, omega, init, cfg)
        est = rep.recovered
        if args.report:
            _write_rows(args.report, [
                {"iter": k + 1, "step_delta": repr(d), "tv_norm": repr(t)}
                for k, (d, t) in enumerate(zip(rep.step_deltas, rep.tv_norms))
            ])
        log.info("tv: %d iterations, converged=%s", rep.iterations, rep.converged)
    io.write_tensor(args.out, est)


def cmd_eval(args) -> None:
    est = io.read_tensor(args.estimate)
    truth = io.read_tensor(args.truth)
    w = _load_weight(args.weight, truth.shape) if args.weight else None
    m = metrics(est, truth, w)
    _write_rows(args.out, [{k: repr(getattr(m, k)) for k in ("rse", "rmse", "rel_unweighted", "rel_weighted")}])


def cmd_bound(args) -> None:
    omega = SamplingPattern(io.read_mask(args.mask))
    w = _load_weight(args.weight, omega.shape)
    rep = bound_report(w, omega, args.sigma, args.tinf, args.ranks)
    _write_rows(args.out, [{k: repr(float(v)) for k, v in rep.as_row().items()}])


def cmd_experiment(args) -> None:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if args.out is not None:
        cfg = replace(cfg, output=str(args.out))
    records = run_experiment(cfg)
    failed = sum(rec.error is not None for rec in records)
    log.info("wrote %d records to %s (%d failed)", len(records), cfg.output, failed)


def cmd_ingest_frames(args) -> None:
    meta = FrameMeta.read(args.meta)
    io.write_tensor(args.out, ingest_frames(args.frames, meta))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tvhosvd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="random Tucker tensor plus Gaussian noise")
    p.add_argument("--shape", type=_ints, required=True)
    p.add_argument("--ranks", type=_ints, required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="noisy tensor (WTEN1)")
    p.add_argument("--truth-out", type=Path, help="optional noiseless tensor (WTEN1)")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("gen-mask", help="random sampling pattern")
    p.add_argument("--shape", type=_ints, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--mode", choices=("uniform", "nonuniform"), default="uniform")
    p.add_argument("--skew", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen_mask)

    p = sub.add_parser("estimate-weight", help="rank-1 weight fitted to a mask")
    p.add_argument("--mask", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_estimate_weight)

    p = sub.add_parser("complete", help="complete a tensor from its observed entries")
    p.add_argument("--method", choices=("hosvd", "hosvd_p", "whosvd", "tv", "whosvd_tv"), required=True)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--mask", type=Path, required=True)
    p.add_argument("--ranks", type=_ints)
    p.add_argument("--weight", help="prefix of weight factor files (<prefix>.f1, ...)")
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--step0", type=float, default=0.1)
    p.add_argument("--schedule", choices=("fixed", "invsqrt"), default="invsqrt")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--report", type=Path, help="per-iteration CSV for TV methods")
    p.set_defaults(func=cmd_complete)

    p = sub.add_parser("eval", help="error metrics of an estimate")
    p.add_argument("--estimate", type=Path, required=True)
    p.add_argument("--truth", type=Path, required=True)
    p.add_argument("--weight")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bound", help="evaluate the recovery bounds for a mask and weight")
    p.add_argument("--mask", type=Path, required=True)
    p.add_argument("--weight", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--tinf", type=float, required=True)
    p.add_argument("--ranks", type=_ints)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("experiment", help="run a configured simulation sweep")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, help="override the config's output path")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("ingest-frames", help="stack raw float32 frames into a tensor")
    p.add_argument("--meta", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("frames", nargs="+", type=Path)
    p.set_defaults(func=cmd_ingest_frames)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
