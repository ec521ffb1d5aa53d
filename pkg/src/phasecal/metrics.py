"""Phase and gain error statistics for calibration estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calibrate import wrap_phase


@dataclass(frozen=True)
class ErrorStats:
    err_max_rad: float
    err_avg_rad: float
    gain_err_max_db: float
    gain_err_avg_db: float


def wrapped_phase_error(true_phi, est_phi):
    """Distance on the circle, ``min_l |true - est + 2*pi*l|``, in [0, pi]."""
    return np.abs(wrap_phase(np.asarray(true_phi, dtype=float) - np.asarray(est_phi, dtype=float)))


def gain_error_db(true_b, est_b):
    """``20*log10(|b - b_hat| / b + 1)``: relative amplitude error expressed in dB, never negative."""
    true_b = np.asarray(true_b, dtype=float)
    if np.any(true_b <= 0):
        raise ValueError("true amplitude must be positive")
    out = 20.0 * np.log10(np.abs(true_b - np.asarray(est_b, dtype=float)) / true_b + 1.0)
    return float(out) if out.ndim == 0 else out


def aggregate(errors: Sequence[np.ndarray], exclude_reference: bool = False) -> tuple[float, float]:
    """Mean over instances of the per-instance maximum, and the overall mean.

    ``errors`` holds one (N x 2**Q) array per instance; with
    ``exclude_reference`` element (0, 0) is left out of both statistics.
    """
    if len(errors) == 0:
        raise ValueError("no instances to aggregate")
    flat = np.array([np.asarray(e, dtype=float).ravel() for e in errors])
    if exclude_reference:
        flat = flat[:, 1:]
    if flat.shape[1] == 0:
        raise ValueError("no elements left to aggregate")
    return float(flat.max(axis=1).mean()), float(flat.mean())


def calibration_errors(gt, estimate) -> tuple[np.ndarray, np.ndarray]:
    """Per-element phase error (rad, against phases referenced to (0, 0)) and gain error (dB)."""
    return (wrapped_phase_error(gt.relative_phi(), estimate.phi_hat),
            gain_error_db(gt.b, estimate.b_hat))


def error_stats(phase_errors: Sequence[np.ndarray], gain_errors: Sequence[np.ndarray]) -> ErrorStats:
    err_max, err_avg = aggregate(phase_errors, exclude_reference=True)
    g_max, g_avg = aggregate(gain_errors, exclude_reference=False)
    return ErrorStats(err_max, err_avg, g_max, g_avg)
