"""Rotating-element electric-field vector (REV) calibration baseline.

With every antenna on, one antenna at a time is stepped through all phase
settings while the others stay at setting 0.  The total power traces

    P(theta) = |E_rest + e_i exp(j theta)|**2

and the maximum/minimum over the grid give the element's amplitude ratio to
the rest of the array and its phase relative to it.  Those are converted to
the element's complex value relative to the all-default composite ``E_0`` and
then to the antenna-0 reference used by the explicit method.

Only meaningful when errors depend on the antenna alone (``phase_dependent``
false): the element response at setting ``k`` is assumed to be the setting-0
response rotated by the nominal ``k`` step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .array_model import GroundTruth, make_rng
from .calibrate import CalibrationEstimate, wrap_phase
from .measurement import NoiseModel, field_power

# Amplitude ratio below which the rest-of-array vector is treated as vanished.
DEGENERATE_RATIO = 1e-6


@dataclass
class RevResult:
    """Final per-antenna REV estimates in the antenna-0 phase reference.

    ``rel_amplitude``/``rel_phase`` are from the last sweep and are relative to
    the rest-of-array vector at that sweep; ``phase``/``gain`` are the composed
    absolute estimates (``phase[0] == 0``).
    """

    rel_amplitude: np.ndarray
    rel_phase: np.ndarray
    phase: np.ndarray
    gain: np.ndarray
    measurement_count: int
    failed: np.ndarray
    history: list[tuple[int, int, float, float]] = field(default_factory=list)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["antenna", "rel_amplitude", "rel_phase_rad", "iteration"])
            for it, i, amp, ph in self.history:
                writer.writerow([i, repr(amp), repr(ph), it])


def rev_sweep_estimate(powers: np.ndarray, phase_step: float, estimator: str = "grid") -> tuple[float, float]:
    """Amplitude ratio and relative phase of the rotated element from one sweep.

    ``grid`` uses the max/min of the sampled powers and the setting at the
    maximum; ``dft`` fits the first Fourier harmonic of the sweep instead.
    """
    powers = np.asarray(powers, dtype=float)
    if estimator == "grid":
        kmax = int(np.argmax(powers))
        hi = math.sqrt(max(powers[kmax], 0.0))
        lo = math.sqrt(max(powers.min(), 0.0))
        ratio = (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0
        return ratio, wrap_phase(-kmax * phase_step)
    if estimator == "dft":
        theta = np.arange(len(powers)) * phase_step
        c1 = np.mean(powers * np.exp(-1j * theta))
        c0 = powers.mean()
        p = abs(c1)
        disc = math.sqrt(max(c0 * c0 - 4 * p * p, 0.0))
        small, big = (c0 - disc) / 2, (c0 + disc) / 2
        ratio = math.sqrt(max(small, 0.0) / big) if big > 0 else 0.0
        return ratio, wrap_phase(float(np.angle(c1)))
    raise ValueError(f"unknown REV estimator {estimator!r}")


def rev_calibrate(gt: GroundTruth, noise: NoiseModel | None = None, iterations: int = 2,
                  rng=None, estimator: str = "grid") -> RevResult:
    """Run ``iterations`` REV sweeps over every antenna.

    Between sweeps the phase estimates are applied as continuous corrections
    so that the next sweep starts from a co-phased array; the final phase
    estimate is the composition of all corrections.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    noise = noise if noise is not None else NoiseModel()
    rng = make_rng(noise.seed) if rng is None else make_rng(rng)
    config = gt.config
    n, K = config.shape
    step = config.phase_step
    correction = np.zeros(n)
    history = []
    failed = np.zeros(n, dtype=bool)
    count = 0
    for it in range(iterations):
        ratio = np.zeros(n)
        rel = np.zeros(n)
        default_powers = []
        for i in range(n):
            b = gt.b[:, 0].copy()
            powers = np.empty(K)
            for k in range(K):
                b[i] = gt.b[i, k]
                phi = gt.phi[:, 0] + correction
                phi[i] = gt.phi[i, k] + correction[i]
                powers[k] = field_power(b, phi, noise, rng)
            count += K
            default_powers.append(powers[0])
            ratio[i], rel[i] = rev_sweep_estimate(powers, step, estimator)
            failed[i] = ratio[i] < DEGENERATE_RATIO
            history.append((it + 1, i, float(ratio[i]), float(rel[i])))
        # element value relative to the all-default composite: e_i / E_0
        w = ratio * np.exp(1j * rel)
        y = w / (1.0 + w)
        correction = correction - wrap_phase(np.angle(y / y[0]))
        composite = math.sqrt(max(float(np.mean(default_powers)), 0.0))
        gain = np.abs(y) * composite
    phase = wrap_phase(-(correction - correction[0]))
    return RevResult(ratio, rel, phase, gain, count, failed, history)


def per_antenna_estimate(estimate: CalibrationEstimate, phase_step: float) -> tuple[np.ndarray, np.ndarray]:
    """Collapse a per-(antenna, setting) estimate to one phase offset and gain per antenna.

    Phase: circular mean over settings of the estimate minus the nominal
    phase.  Gain: arithmetic mean over settings.
    """
    K = estimate.phi_hat.shape[1]
    offsets = estimate.phi_hat - np.arange(K)[None, :] * phase_step
    phase = wrap_phase(np.angle(np.exp(1j * offsets).sum(axis=1)))
    phase = wrap_phase(phase - phase[0])
    return phase, estimate.b_hat.mean(axis=1)
