"""Command line driver: ``phasecal <experiment> [--config FILE] [overrides]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigurationError
from .experiments import (EXPERIMENTS, REV_COLUMNS, SWEEP_COLUMNS, RunConfig, rev_regime,
                          run_calibrate_sweep, run_eirp_cdf, run_rev_compare)
from .eirp import write_summary_json
from .report import write_sidecar, write_table

log = logging.getLogger("phasecal")

EIRP_DEFAULT_SNRS = (20.0, 30.0)


def _snr(text: str) -> float:
    value = float(text)
    if math.isnan(value) or value == -math.inf:
        raise argparse.ArgumentTypeError(f"invalid SNR {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasecal", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--snr", type=_snr, nargs="+", metavar="DB", help="SNR points in dB ('inf' = noiseless)")
    parser.add_argument("--iters", type=int, help="Monte Carlo instances per SNR point")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--workers", type=int, help="worker processes (results do not depend on this)")
    parser.add_argument("--no-plot", dest="plot", action="store_false", help="skip figure rendering")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.config is not None:
        cfg = RunConfig.load(args.config)
        cfg = dataclasses.replace(cfg, experiment=args.experiment)
    else:
        snrs = EIRP_DEFAULT_SNRS if args.experiment == "eirp-cdf" else RunConfig.snr_list_db
        iters = 200 if args.experiment == "eirp-cdf" else RunConfig.iterations
        cfg = RunConfig(experiment=args.experiment, snr_list_db=snrs, iterations=iters)
    overrides = {}
    if args.snr is not None:
        overrides["snr_list_db"] = tuple(args.snr)
    if args.iters is not None:
        overrides["iterations"] = args.iters
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    if args.workers is not None:
        overrides["workers"] = args.workers
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def run(cfg: RunConfig, plot: bool = True) -> list[Path]:
    """Run one experiment and write its CSV/JSON outputs (and figures); returns written paths."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    if cfg.experiment == "calibrate-sweep":
        rows = run_calibrate_sweep(cfg)
        path = write_table(out / "calibrate_sweep.csv", SWEEP_COLUMNS, rows)
        written += [path, write_sidecar(path, cfg.to_dict())]
        if plot:
            from .plotting import plot_sweep
            written += plot_sweep(rows, out)
    elif cfg.experiment == "rev-compare":
        cfg = rev_regime(cfg)
        rows = run_rev_compare(cfg)
        path = write_table(out / "rev_compare.csv", REV_COLUMNS, rows)
        written += [path, write_sidecar(path, cfg.to_dict())]
        if plot:
            from .plotting import plot_rev
            written += plot_rev(rows, out)
    else:
        reports, summary = run_eirp_cdf(cfg)
        for rep in reports:
            path = out / f"eirp_cdf_{rep.name}.csv"
            rep.to_csv(path)
            written += [path, write_sidecar(path, cfg.to_dict(), codebook=rep.name)]
        summary_path = out / "eirp_percentiles.json"
        write_summary_json(reports, summary_path, summary)
        written.append(summary_path)
        if plot:
            from .plotting import plot_eirp_cdf
            written.append(plot_eirp_cdf(reports, out / "eirp_cdf.png"))
    return written


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        written = run(cfg, plot=args.plot)
    except ConfigurationError as exc:
        print(f"phasecal: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        where = f" ({exc.filename})" if getattr(exc, "filename", None) else ""
        print(f"phasecal: I/O error{where}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
