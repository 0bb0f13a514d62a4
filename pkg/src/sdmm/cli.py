"""``sdmm`` command line: multiply, worker, calibrate, sweep, figures."""

import argparse
import json
import logging
import os
import sys
import warnings

from . import cmat
from .codec import GaspParams, MatDotParams
from .experiment import (
    ExperimentConfig,
    emit_csv,
    emit_figure,
    emit_json,
    emit_trials_csv,
    read_csv,
    run_sweep,
)
from .runtime import InProcessCluster, NetworkCluster, StragglerModel, run_job
from .security import calibrate, input_entropy_bits
from .worker import worker_serve


def _env_seed(default):
    env = os.environ.get("SDMM_SEED")
    return int(env) if env else default


def _params(args, n_servers):
    if args.scheme == "matdot":
        if args.p is None:
            raise SystemExit("--p is required for matdot")
        return MatDotParams(args.p, args.x, n_servers)
    if args.m is None or args.n_split is None:
        raise SystemExit("--m and --n-split are required for gasp")
    return GaspParams(args.m, args.n_split, args.x, n_servers)


def _add_scheme_args(p):
    p.add_argument("--scheme", choices=["matdot", "gasp"], required=True)
    p.add_argument("--p", type=int, help="MatDot partition count")
    p.add_argument("--m", type=int, help="GASP row partition count of A")
    p.add_argument("--n-split", type=int, help="GASP column partition count of B")
    p.add_argument("--x", type=int, required=True, help="collusion tolerance X")
    p.add_argument("--n", type=int, required=True, help="number of servers N")
    p.add_argument("--strategy", choices=["auto", "exhaustive", "consecutive"], default="auto")
    p.add_argument("--input-sigma2", type=float, default=1.0)
    p.add_argument("--complex-inputs", action="store_true",
                   help="entropy proxy for circular complex inputs (default: real)")


def _budget(args, dims):
    if (args.delta_bits is None) == (args.delta_rel is None):
        raise SystemExit("give exactly one of --delta-bits and --delta-rel")
    if args.delta_bits is not None:
        return args.delta_bits
    entropy = input_entropy_bits(dims, args.input_sigma2, args.input_sigma2, args.complex_inputs)
    return args.delta_rel * entropy


def cmd_calibrate(args):
    dims = (args.t, args.s, args.r)
    params = _params(args, args.n)
    delta = _budget(args, dims)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, report = calibrate(
            delta, dims, params, None, args.input_sigma2, args.input_sigma2, args.strategy
        )
    print(report.to_json(indent=2))


def cmd_multiply(args):
    a = cmat.load(args.a)
    b = cmat.load(args.b)
    dims = (a.shape[0], a.shape[1], b.shape[1])
    params = _params(args, args.n)
    delta = _budget(args, dims)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        noise, report = calibrate(
            delta, dims, params, None, args.input_sigma2, args.input_sigma2, args.strategy
        )
    if args.workers:
        cluster = NetworkCluster(args.workers.split(","), timeout=args.timeout)
    else:
        cluster = InProcessCluster(keep_matrices=False)
    product, record = run_job(
        a, b, params, noise, StragglerModel(args.stragglers), _env_seed(args.seed), cluster
    )
    cmat.save(args.out, product)
    summary = {
        "sigma2": noise.sigma2,
        "delta_bits": delta,
        "worst_set": list(report.worst_set),
        "used_servers": list(record.used_set),
        "stragglers": list(record.straggler_set),
        "condition": record.condition,
        "abs_error": record.abs_error,
        "rel_error": record.rel_error,
    }
    print(json.dumps(summary, indent=2))


def cmd_worker(args):
    logging.basicConfig(level=logging.INFO)
    try:
        worker_serve(args.listen, keep_matrices=False)
    except KeyboardInterrupt:
        pass


def cmd_sweep(args):
    with open(args.config) as fh:
        raw = json.load(fh)
    if os.environ.get("SDMM_SEED"):
        raw["seed"] = int(os.environ["SDMM_SEED"])
    config = ExperimentConfig.from_dict(raw)
    os.makedirs(args.out_dir, exist_ok=True)

    def progress(cell):
        if not args.quiet:
            print(
                f"cell {cell.cell_id}: {cell.scheme} X={cell.X} N={cell.N} "
                f"stragglers={cell.stragglers} delta_rel={cell.delta_relative:.3g} "
                f"mean_err={cell.mean_err:.3g}",
                file=sys.stderr,
            )

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        table = run_sweep(config, progress)
    emit_csv(table, os.path.join(args.out_dir, "cells.csv"))
    emit_json(table, os.path.join(args.out_dir, "cells.json"))
    if config.per_trial:
        emit_trials_csv(table, os.path.join(args.out_dir, "trials.csv"))


def cmd_figures(args):
    rows = read_csv(os.path.join(args.results, "cells.csv"))
    for path in emit_figure(rows, args.figure, args.results):
        print(path)


def build_parser():
    parser = argparse.ArgumentParser(prog="sdmm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("multiply", help="securely multiply two CMAT matrices")
    _add_scheme_args(p)
    p.add_argument("--delta-bits", type=float)
    p.add_argument("--delta-rel", type=float)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--workers", help="comma-separated host:port list")
    mode.add_argument("--simulate", action="store_true", help="in-process workers (default)")
    p.add_argument("--stragglers", type=int, default=0)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_multiply)

    p = sub.add_parser("worker", help="serve worker tasks")
    p.add_argument("--listen", required=True, help="host:port")
    p.set_defaults(func=cmd_worker)

    p = sub.add_parser("calibrate", help="mask variance for a leakage budget")
    _add_scheme_args(p)
    p.add_argument("--t", type=int, default=36)
    p.add_argument("--s", type=int, default=36)
    p.add_argument("--r", type=int, default=36)
    p.add_argument("--delta-bits", type=float)
    p.add_argument("--delta-rel", type=float)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep", help="run a security/accuracy sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figures", help="per-figure CSV and gnuplot script")
    p.add_argument("--results", required=True)
    p.add_argument("--figure", type=int, choices=[1, 2], required=True)
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"sdmm: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
