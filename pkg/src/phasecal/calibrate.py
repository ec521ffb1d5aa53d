"""Closed-form explicit calibration from individual and pairwise power measurements.

Phases are recovered in the gauge where element (0, 0) has phase zero.  Each
phase is solved from its cosines against two references roughly a quarter turn
apart:

* Ant1 against (0, 0); the Ant1 setting closest to +-pi/2 becomes reference
  ``(1, r1)``, its sign taken from the cosine a quarter turn further on.
* Antennas 2.. against (0, 0) and (1, r1).
* Ant0 against (1, r1) and (2, r2), r2 picked from the Ant2 estimates.
* The rest of Ant1 against (0, 0) and (2, r3), r3 picked from the Ant2 estimates.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from . import measurement as meas
from .array_model import ArrayConfig
from .errors import (ConfigurationError, DegenerateElementError, IncompletePlanError,
                     ReferenceDegeneracyError)
from .measurement import MeasurementRecord

# Smallest |sin(ref1 - ref2)| accepted before the 2x2 system is declared singular.
KAPPA_MIN = 0.05
# Below this |lookahead cosine| the sign of the second reference is shaky.
SIGN_WARN_LEVEL = 0.3


class AmbiguousSignWarning(UserWarning):
    """The sign test for the second reference saw a cosine close to zero."""


def wrap_phase(x):
    """Map angles into (-pi, pi]."""
    w = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True, eq=False)
class CalibrationEstimate:
    b_hat: np.ndarray
    phi_hat: np.ndarray
    refs: tuple[int, int, int] | None = None

    @property
    def field(self) -> np.ndarray:
        return self.b_hat * np.exp(1j * self.phi_hat)

    @classmethod
    def from_field(cls, z: np.ndarray, refs=None) -> "CalibrationEstimate":
        """Estimate from complex element values, rotated so element (0, 0) has phase 0."""
        z = np.asarray(z, dtype=complex)
        rot = z[0, 0] / abs(z[0, 0]) if z[0, 0] != 0 else 1.0
        z = z / rot
        phi = wrap_phase(np.angle(z))
        phi[0, 0] = 0.0
        return cls(np.abs(z), phi, refs)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["i", "k", "b_hat", "phi_hat_rad"])
            n, K = self.b_hat.shape
            for i in range(n):
                for k in range(K):
                    writer.writerow([i, k, repr(float(self.b_hat[i, k])), repr(float(self.phi_hat[i, k]))])


# -- building blocks -----------------------------------------------------------

def estimate_gains(records: Iterable[MeasurementRecord], config: ArrayConfig) -> np.ndarray:
    """Amplitude of every element from its individual power, ``sqrt(max(M, 0))``."""
    b_hat = np.full(config.shape, np.nan)
    for rec in records:
        if rec.kind == meas.INDIVIDUAL:
            b_hat[rec.first] = math.sqrt(max(rec.power, 0.0))
    if np.isnan(b_hat).any():
        missing = [tuple(int(v) for v in ix) for ix in np.argwhere(np.isnan(b_hat))]
        raise IncompletePlanError(f"no individual measurement for elements {missing[:5]}"
                                  + (" ..." if len(missing) > 5 else ""))
    return b_hat


def estimate_cos_diff(m_pair: float, m_a: float, m_b: float) -> float:
    """Cosine of the phase difference of two elements from their powers.

    Clamped to [-1, 1] since noise can push the raw ratio outside.
    """
    if m_a <= 0 or m_b <= 0:
        raise DegenerateElementError(f"element power must be positive, got {m_a} and {m_b}")
    c = (m_pair - m_a - m_b) / (2.0 * math.sqrt(m_a * m_b))
    return min(1.0, max(-1.0, c))


def _argmin_abs(values: np.ndarray) -> int:
    # np.argmin returns the first minimum, i.e. ties go to the lowest index
    return int(np.argmin(np.abs(values)))


def select_second_reference(cos_to_ref: np.ndarray) -> tuple[int, float]:
    """Pick the setting whose phase is closest to +-pi/2 and resolve its sign.

    The sign comes from the cosine a quarter turn ahead: near +1 means the
    reference sits near -pi/2, otherwise near +pi/2.
    """
    cos_to_ref = np.asarray(cos_to_ref, dtype=float)
    K = len(cos_to_ref)
    r1 = _argmin_abs(cos_to_ref)
    s = cos_to_ref[(r1 + K // 4) % K]
    if abs(s) < SIGN_WARN_LEVEL:
        warnings.warn(f"lookahead cosine {s:.3f} near zero; sign of the second reference is uncertain",
                      AmbiguousSignWarning, stacklevel=2)
    angle = math.acos(min(1.0, max(-1.0, cos_to_ref[r1])))
    return r1, (-angle if s > 0 else angle)


def resolve_phase_pair(A: float, B: float, phi_ref1: float, phi_ref2: float) -> float:
    """Phase whose cosines against two known reference phases are ``A`` and ``B``.

    Solves ``[[cos r1, sin r1], [cos r2, sin r2]] @ [u, v] = [A, B]`` and returns
    ``angle(u + jv)`` without renormalising ``(u, v)``.
    """
    det = math.sin(phi_ref2 - phi_ref1)
    if abs(det) < KAPPA_MIN:
        raise ReferenceDegeneracyError(
            f"references {phi_ref1:.4f} and {phi_ref2:.4f} rad are nearly collinear (|sin|={abs(det):.3g})")
    c1, s1 = math.cos(phi_ref1), math.sin(phi_ref1)
    c2, s2 = math.cos(phi_ref2), math.sin(phi_ref2)
    u = (s2 * A - s1 * B) / det
    v = (c1 * B - c2 * A) / det
    return wrap_phase(math.atan2(v, u))


# -- orchestration -------------------------------------------------------------

class MeasurementOracle(Protocol):
    records: list

    def measure(self, entry: meas.PlanEntry) -> float: ...


def run_calibration(config: ArrayConfig, oracle: MeasurementOracle) -> tuple[CalibrationEstimate, list]:
    """Measure and solve for all element gains and phases.

    ``oracle`` executes plan entries (see ``measurement.MeasurementSession``).
    Returns the estimate and the oracle's record log.
    """
    n, K = config.shape
    if n < 3:
        raise ConfigurationError("calibration needs at least 3 antennas")

    def run(entries):
        return [oracle.measure(e) for e in entries]

    M = np.array(run(meas.plan_individual(config))).reshape(n, K)
    for rec_power in M.flat:
        if rec_power <= 0:
            raise DegenerateElementError("an element measured zero power")
    b_hat = np.sqrt(M)
    phi = np.full((n, K), np.nan)
    phi[0, 0] = 0.0

    def cos_between(powers, entries):
        return np.array([estimate_cos_diff(p, M[e.first], M[e.second]) for p, e in zip(powers, entries)])

    # Ant1 against (0, 0), second reference
    entries = meas.plan_ant1_vs_origin(config)
    cos_1_00 = cos_between(run(entries), entries)
    r1, phi_r1 = select_second_reference(cos_1_00)
    phi[1, r1] = wrap_phase(phi_r1)

    # antennas 2.. against (0, 0) and (1, r1)
    entries = meas.plan_other_antennas(config, r1)
    c = cos_between(run(entries), entries).reshape(n - 2, K, 2)
    for i in range(2, n):
        for k in range(K):
            phi[i, k] = resolve_phase_pair(c[i - 2, k, 0], c[i - 2, k, 1], 0.0, phi[1, r1])

    r2 = _argmin_abs(np.cos(phi[2] - phi[1, r1]))
    entries = meas.plan_ant0(config, r1, r2)
    c = cos_between(run(entries), entries).reshape(K - 1, 2)
    for k in range(1, K):
        phi[0, k] = resolve_phase_pair(c[k - 1, 0], c[k - 1, 1], phi[1, r1], phi[2, r2])

    r3 = _argmin_abs(np.cos(phi[2]))
    entries = meas.plan_ant1_rest(config, r1, r3)
    c = cos_between(run(entries), entries)
    for (k, cos_r3) in zip((k for k in range(K) if k != r1), c):
        phi[1, k] = resolve_phase_pair(cos_1_00[k], cos_r3, 0.0, phi[2, r3])

    return CalibrationEstimate(b_hat, phi, (r1, r2, r3)), oracle.records


def calibrate(gt, noise: meas.NoiseModel | None = None) -> tuple[CalibrationEstimate, list]:
    """Shortcut: calibrate a simulated array with a fresh measurement session."""
    session = meas.MeasurementSession(gt, noise)
    return run_calibration(gt.config, session)
