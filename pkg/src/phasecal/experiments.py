"""Monte Carlo experiments: SNR sweeps, REV comparison and EIRP coverage.

Every instance draws from its own RNG streams keyed by
``(master_seed, purpose, [snr index,] iteration)``, so results are identical
whatever the worker count or scheduling order.  The ground truth for
iteration ``t`` is shared by all SNR points.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import eirp as eirp_mod
from .array_model import ArrayConfig, ErrorSpec, config_from_dict, config_to_dict, generate_ground_truth, stream
from .calibrate import AmbiguousSignWarning, calibrate
from .errors import ConfigurationError, DegenerateElementError, ReferenceDegeneracyError
from .measurement import NoiseModel, plan_size
from .metrics import aggregate, calibration_errors, gain_error_db, wrapped_phase_error
from .refine import RefineSettings, refine
from .rev import per_antenna_estimate, rev_calibrate

log = logging.getLogger(__name__)

EXPERIMENTS = ("calibrate-sweep", "rev-compare", "eirp-cdf")

# stream purposes
TRUTH, NOISE, REV_NOISE, SPHERE = 0, 1, 2, 3

_SOLVER_FAILURES = (ReferenceDegeneracyError, DegenerateElementError)


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "calibrate-sweep"
    array: ArrayConfig = field(default_factory=ArrayConfig)
    errors: ErrorSpec = field(default_factory=ErrorSpec)
    snr_list_db: tuple[float, ...] = (10.0, 20.0, 30.0, 40.0)
    iterations: int = 1000
    master_seed: int = 0
    output_dir: str = "results"
    refine: RefineSettings = field(default_factory=RefineSettings)
    rev_iterations: int = 2
    sphere_samples: int = 500
    directions_deg: tuple[float, ...] = eirp_mod.DEFAULT_DIRECTIONS_DEG
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        snrs = tuple(float(s) for s in self.snr_list_db)
        if not snrs:
            raise ConfigurationError("snr_list_db must not be empty")
        if any(math.isnan(s) or s == -math.inf for s in snrs):
            raise ConfigurationError("SNR values must be finite or +inf")
        object.__setattr__(self, "snr_list_db", snrs)
        object.__setattr__(self, "directions_deg", tuple(float(d) for d in self.directions_deg))
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.rev_iterations < 1:
            raise ConfigurationError("rev_iterations must be >= 1")
        if self.sphere_samples < 100:
            raise ConfigurationError("sphere_samples must be >= 100")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build from JSON data: array/error keys either nested or at top level."""
        data = dict(data)
        flat = dict(data.pop("array", {}))
        flat.update(data.pop("errors", {}))
        for key in ("n_antennas", "q_bits", "gain_range_db", "phase_shifter_err_range_deg",
                    "antenna_path_err_range_deg", "phase_dependent"):
            if key in data:
                flat[key] = data.pop(key)
        array, errors, _ = config_from_dict(flat)
        if "seed" in data:
            data.setdefault("master_seed", data.pop("seed"))
        refine_settings = RefineSettings(**data.pop("refine", {}))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(array=array, errors=errors, refine=refine_settings, **data)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment}
        out.update(config_to_dict(self.array, self.errors))
        out.update({
            "snr_list_db": list(self.snr_list_db),
            "iterations": self.iterations,
            "master_seed": self.master_seed,
            "output_dir": str(self.output_dir),
            "refine": dataclasses.asdict(self.refine),
            "rev_iterations": self.rev_iterations,
            "sphere_samples": self.sphere_samples,
            "directions_deg": list(self.directions_deg),
        })
        return out


def _map(fn: Callable, jobs: Sequence, workers: int) -> list:
    if workers <= 1 or len(jobs) < 2:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _calibrate_refined(gt, noise: NoiseModel, settings: RefineSettings):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AmbiguousSignWarning)
        est, records = calibrate(gt, noise)
    return est, refine(est, records, settings).estimate, len(records)


# -- calibrate-sweep -------------------------------------------------------------

def _sweep_instance(job):
    cfg, snr_idx, it = job
    snr = cfg.snr_list_db[snr_idx]
    gt = generate_ground_truth(cfg.array, cfg.errors, stream(cfg.master_seed, TRUTH, it))
    noise = NoiseModel(snr, stream(cfg.master_seed, NOISE, snr_idx, it))
    try:
        est, opt, _ = _calibrate_refined(gt, noise, cfg.refine)
    except _SOLVER_FAILURES:
        return None
    return calibration_errors(gt, est) + calibration_errors(gt, opt)


SWEEP_COLUMNS = ("snr_db", "err_max", "err_avg", "err_max_opt", "err_avg_opt",
                 "gain_err_max_db", "gain_err_avg_db", "gain_err_max_opt_db", "gain_err_avg_opt_db",
                 "instances", "failures")


def run_calibrate_sweep(cfg: RunConfig) -> list[dict]:
    """One row of averaged error statistics per SNR point."""
    jobs = [(cfg, s, it) for s in range(len(cfg.snr_list_db)) for it in range(cfg.iterations)]
    results = _map(_sweep_instance, jobs, cfg.workers)
    rows = []
    for s, snr in enumerate(cfg.snr_list_db):
        chunk = [r for r in results[s * cfg.iterations:(s + 1) * cfg.iterations] if r is not None]
        failures = cfg.iterations - len(chunk)
        if failures:
            log.warning("snr %s dB: %d of %d instances hit a degenerate reference and were dropped",
                        snr, failures, cfg.iterations)
        row = {"snr_db": snr}
        if chunk:
            ph, g, ph_opt, g_opt = zip(*chunk)
            row["err_max"], row["err_avg"] = aggregate(ph, exclude_reference=True)
            row["err_max_opt"], row["err_avg_opt"] = aggregate(ph_opt, exclude_reference=True)
            row["gain_err_max_db"], row["gain_err_avg_db"] = aggregate(g)
            row["gain_err_max_opt_db"], row["gain_err_avg_opt_db"] = aggregate(g_opt)
        else:
            row.update({c: math.nan for c in SWEEP_COLUMNS[1:9]})
        row["instances"] = len(chunk)
        row["failures"] = failures
        rows.append(row)
    return rows


# -- rev-compare -----------------------------------------------------------------

def _rev_instance(job):
    cfg, snr_idx, it = job
    snr = cfg.snr_list_db[snr_idx]
    gt = generate_ground_truth(cfg.array, cfg.errors, stream(cfg.master_seed, TRUTH, it))
    true_phase = gt.delta_ant - gt.delta_ant[0]
    true_gain = gt.b[:, 0]
    rev = rev_calibrate(gt, NoiseModel(snr, stream(cfg.master_seed, REV_NOISE, snr_idx, it)),
                        iterations=cfg.rev_iterations)
    rev_err = (wrapped_phase_error(true_phase, rev.phase), gain_error_db(true_gain, rev.gain))
    try:
        _, opt, n_meas = _calibrate_refined(
            gt, NoiseModel(snr, stream(cfg.master_seed, NOISE, snr_idx, it)), cfg.refine)
    except _SOLVER_FAILURES:
        return None, rev_err, rev.measurement_count, 0
    phase, gain = per_antenna_estimate(opt, cfg.array.phase_step)
    ours = (wrapped_phase_error(true_phase, phase), gain_error_db(true_gain, gain))
    return ours, rev_err, rev.measurement_count, n_meas


REV_COLUMNS = ("snr_db", "err_max_opt", "err_avg_opt", "err_max_REV", "err_avg_REV",
               "gain_err_max_opt_db", "gain_err_avg_opt_db", "gain_err_max_REV_db", "gain_err_avg_REV_db",
               "measurements_opt", "measurements_REV", "instances", "failures")


def rev_regime(cfg: RunConfig) -> RunConfig:
    """``cfg`` with phase-dependent errors switched off, as REV requires."""
    if cfg.errors.phase_dependent:
        log.info("rev-compare: forcing phase_dependent=false (per-antenna errors only)")
        return dataclasses.replace(cfg, errors=dataclasses.replace(cfg.errors, phase_dependent=False))
    return cfg


def run_rev_compare(cfg: RunConfig) -> list[dict]:
    """Per-antenna phase and gain errors of the refined explicit method vs. REV.

    Phase statistics cover antennas 1.. (antenna 0 is the reference); gain
    statistics cover every antenna.
    """
    cfg = rev_regime(cfg)
    jobs = [(cfg, s, it) for s in range(len(cfg.snr_list_db)) for it in range(cfg.iterations)]
    results = _map(_rev_instance, jobs, cfg.workers)
    rows = []
    for s, snr in enumerate(cfg.snr_list_db):
        chunk = results[s * cfg.iterations:(s + 1) * cfg.iterations]
        ok = [r for r in chunk if r[0] is not None]
        row = {"snr_db": snr}
        ph, g = zip(*(r[0] for r in ok)) if ok else ((), ())
        ph_rev, g_rev = zip(*(r[1] for r in ok)) if ok else ((), ())
        if ok:
            row["err_max_opt"], row["err_avg_opt"] = aggregate(ph, exclude_reference=True)
            row["err_max_REV"], row["err_avg_REV"] = aggregate(ph_rev, exclude_reference=True)
            row["gain_err_max_opt_db"], row["gain_err_avg_opt_db"] = aggregate(g)
            row["gain_err_max_REV_db"], row["gain_err_avg_REV_db"] = aggregate(g_rev)
        else:
            row.update({c: math.nan for c in REV_COLUMNS[1:9]})
        row["measurements_opt"] = plan_size(cfg.array)
        row["measurements_REV"] = cfg.rev_iterations * cfg.array.n_antennas * cfg.array.n_phases
        row["instances"] = len(ok)
        row["failures"] = len(chunk) - len(ok)
        rows.append(row)
    log.info("measurements per calibration: explicit %d, REV %d",
             plan_size(cfg.array), rows[0]["measurements_REV"])
    return rows


# -- eirp-cdf --------------------------------------------------------------------

def _eirp_instance(job):
    cfg, it, ideal_cb = job
    gt = generate_ground_truth(cfg.array, cfg.errors, stream(cfg.master_seed, TRUTH, it))
    theta = eirp_mod.sample_sphere(cfg.sphere_samples, stream(cfg.master_seed, SPHERE, it))
    out = [eirp_mod.coverage_eirp(gt, ideal_cb, theta)]
    for s, snr in enumerate(cfg.snr_list_db):
        noise = NoiseModel(snr, stream(cfg.master_seed, NOISE, s, it))
        try:
            _, opt, _ = _calibrate_refined(gt, noise, cfg.refine)
        except _SOLVER_FAILURES:
            return None
        cb = eirp_mod.calibrated_codebook(opt, cfg.array, cfg.directions_deg)
        out.append(eirp_mod.coverage_eirp(gt, cb, theta))
    return out


def snr_label(snr: float) -> str:
    return "noiseless" if snr == math.inf else f"{snr:g}db"


def run_eirp_cdf(cfg: RunConfig) -> tuple[list[eirp_mod.EirpReport], dict]:
    """Coverage CDFs of the ideal codebook and of codebooks designed from calibration at each SNR.

    Returns the reports (uncalibrated first) and a summary with percentile
    improvements of each calibrated codebook over the uncalibrated one.
    """
    ideal_cb = eirp_mod.ideal_codebook(cfg.array, cfg.directions_deg)
    results = _map(_eirp_instance, [(cfg, it, ideal_cb) for it in range(cfg.iterations)], cfg.workers)
    ok = [r for r in results if r is not None]
    if not ok:
        raise RuntimeError("every EIRP instance failed to calibrate")
    scale = eirp_mod.max_eirp(cfg.array, cfg.errors.max_gain_db)
    names = ["uncalibrated"] + [f"calibrated_{snr_label(s)}" for s in cfg.snr_list_db]
    reports = []
    for j, name in enumerate(names):
        samples = np.concatenate([r[j] for r in ok])
        reports.append(eirp_mod.EirpReport.from_samples(name, 10.0 * np.log10(samples / scale)))
    base = reports[0]
    summary = {
        "instances": len(ok),
        "failures": len(results) - len(ok),
        "max_eirp_linear": scale,
        "delta_vs_uncalibrated": [
            {"codebook": r.name, **{f"p{p}_delta_db": r.percentiles[p] - base.percentiles[p] for p in r.percentiles}}
            for r in reports[1:]
        ],
    }
    return reports, summary
