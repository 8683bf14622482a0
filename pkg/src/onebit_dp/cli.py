"""Command-line entry point: ``onebit-dp {synth,real,sweep-ratio,plotdata}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .data import DataError
from .spg import SolverError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _common(p: argparse.ArgumentParser, *, ratio_help: str):
    p.add_argument("--config", help="INI-style experiment manifest")
    p.add_argument("--seeds", help="seed list, e.g. '0-39' or '1,4,7'")
    p.add_argument("--eps", help="comma-separated privacy budgets")
    p.add_argument("--mechanisms", help="comma-separated subset of clear,inp,objp,grap,outp")
    p.add_argument("--out", help="result CSV path")
    p.add_argument("--link", choices=("logistic", "gaussian"))
    p.add_argument("--sigma", type=float, help="Gaussian link scale")
    p.add_argument("--ratio", help=ratio_help)
    p.add_argument("--projection", choices=("dykstra", "nuclear_only"))
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onebit-dp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every cell and its budget")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="mechanism x epsilon grid on synthetic data")
    _common(p, ratio_help="observation ratio (default 0.15)")
    p.add_argument("--dataset", default=None, help="only 'synthetic' is accepted here")

    p = sub.add_parser("real", help="mechanism x epsilon grid on ML-100K or RC")
    _common(p, ratio_help="ignored for real data")
    p.add_argument("--dataset", help="'ml100k:PATH' or 'rc:PATH' (file or directory)")

    p = sub.add_parser("sweep-ratio", help="observation-ratio sweep on synthetic data")
    _common(p, ratio_help="comma-separated ratios (default 0.2,...,0.8)")
    p.add_argument("--dataset", default=None, help="only 'synthetic' is accepted here")

    p = sub.add_parser("plotdata", help="aggregate a result CSV into per-figure series")
    p.add_argument("result", help="result CSV written by another subcommand")
    p.add_argument("--out", help="output directory (default: next to the result file)")
    return parser


def _config_for(args, base: ex.ExperimentConfig) -> ex.ExperimentConfig:
    dataset = path = None
    if args.dataset:
        dataset, _, path = args.dataset.partition(":")
        path = path or None
    return ex.load_config(
        args.config, base=base, dataset=dataset, data_path=path, seeds=args.seeds,
        eps=args.eps, mechanisms=args.mechanisms, out=args.out, link=args.link,
        sigma=args.sigma, ratio=args.ratio, projection=args.projection, jobs=args.jobs,
    )


def _defaults(command: str) -> ex.ExperimentConfig:
    if command == "real":
        return ex.ExperimentConfig(dataset="ml100k", seeds=tuple(range(10)),
                                   projection="nuclear_only", out="results_real.csv")
    if command == "sweep-ratio":
        return ex.ExperimentConfig(ratios=tuple(round(0.1 * k, 1) for k in range(2, 9)),
                                   seeds=tuple(range(10)), out="results_ratio.csv")
    return ex.ExperimentConfig(out="results_synth.csv")


def _run(args) -> int:
    if args.command == "plotdata":
        for p in ex.write_plotdata(args.result, args.out):
            print(p)
        return EXIT_OK
    cfg = _config_for(args, _defaults(args.command))
    if args.command == "real":
        if cfg.dataset == "synthetic":
            raise ex.ConfigError("the real subcommand needs --dataset ml100k:PATH or rc:PATH")
        rows = ex.run_real(cfg)
    else:
        if cfg.dataset != "synthetic":
            raise ex.ConfigError(f"{args.command} runs on synthetic data only")
        rows = ex.run_synthetic(cfg) if args.command == "synth" else ex.run_ratio_sweep(cfg)
    out = Path(cfg.out)
    ex.write_rows(rows, out, budget_path=out.with_suffix(".budget.csv"))
    print(f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SolverError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
