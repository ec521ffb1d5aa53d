"""Least-squares refinement of a calibration estimate against all recorded powers.

Unknowns are the real and imaginary parts of every complex element response,
``z_ik = b_ik exp(j phi_ik) = bR_ik + j bC_ik``.  A record with elements
``e`` predicts power ``|sum_e z_e|**2``; residuals are predicted minus
measured power.  The global phase is pinned by holding ``bC_00 = 0``, which
leaves ``2*N*2**Q - 1`` free parameters.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .calibrate import CalibrationEstimate
from .errors import ConfigurationError
from .measurement import MeasurementRecord


@dataclass(frozen=True)
class RefineSettings:
    max_iterations: int = 200
    gradient_tol: float = 1e-10
    step_tol: float = 1e-12
    damping_init: float = 1e-3

    def __post_init__(self):
        for name in ("max_iterations", "gradient_tol", "step_tol", "damping_init"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")


@dataclass
class TraceRow:
    iteration: int
    objective: float
    damping: float
    step_norm: float
    accepted: bool


@dataclass
class RefineResult:
    estimate: CalibrationEstimate
    converged: bool
    iterations: int
    initial_objective: float
    final_objective: float
    trace: list[TraceRow] = field(default_factory=list)

    def trace_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "objective", "damping", "step_norm", "accepted"])
            for row in self.trace:
                writer.writerow([row.iteration, repr(row.objective), repr(row.damping),
                                 repr(row.step_norm), int(row.accepted)])


class PowerModel:
    """Record-to-element incidence for a fixed record set.

    ``A[l, e] = 1`` when element ``e`` (flattened ``i * K + k``) is switched on
    in record ``l``.
    """

    def __init__(self, records: Sequence[MeasurementRecord], shape: tuple[int, int]):
        self.shape = shape
        n, K = shape
        self.A = np.zeros((len(records), n * K))
        for row, rec in enumerate(records):
            for (i, k) in rec.elements:
                if not (0 <= i < n and 0 <= k < K):
                    raise ConfigurationError(f"record element ({i}, {k}) outside a {n}x{K} array")
                self.A[row, i * K + k] += 1.0
        self.measured = np.array([rec.power for rec in records], dtype=float)

    @property
    def n_params(self) -> int:
        return 2 * self.A.shape[1] - 1

    def to_params(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex).ravel()
        return np.concatenate([z.real, z.imag[1:]])

    def to_field(self, x: np.ndarray) -> np.ndarray:
        m = self.A.shape[1]
        imag = np.concatenate([[0.0], x[m:]])
        return (x[:m] + 1j * imag).reshape(self.shape)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        s = self.A @ self.to_field(x).ravel()
        return s.real ** 2 + s.imag ** 2 - self.measured

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        s = self.A @ self.to_field(x).ravel()
        jr = 2.0 * s.real[:, None] * self.A
        jc = 2.0 * s.imag[:, None] * self.A
        return np.hstack([jr, jc[:, 1:]])


def objective(z: np.ndarray, records: Sequence[MeasurementRecord]) -> float:
    """Sum of squared power residuals for complex element values ``z`` (N x 2**Q)."""
    z = np.asarray(z, dtype=complex)
    total = 0.0
    for rec in records:
        s = sum(z[e] for e in rec.elements)
        total += (abs(s) ** 2 - rec.power) ** 2
    return total


def refine(initial: CalibrationEstimate, records: Sequence[MeasurementRecord],
           settings: RefineSettings | None = None) -> RefineResult:
    """Levenberg-Marquardt polish of ``initial`` against ``records``.

    Damping is Marquardt-scaled, multiplied by 10 after a rejected step and
    divided by 3 after an accepted one.  The objective never increases; if the
    iteration budget runs out the best point so far is returned with
    ``converged=False``.
    """
    settings = settings or RefineSettings()
    model = PowerModel(records, initial.b_hat.shape)
    start = CalibrationEstimate.from_field(initial.field, initial.refs)
    x = model.to_params(start.field)
    r = model.residuals(x)
    f = float(r @ r)
    f0 = f
    lam = settings.damping_init
    trace: list[TraceRow] = []
    converged = False
    it = 0
    J = model.jacobian(x)
    g = J.T @ r
    while it < settings.max_iterations:
        if np.max(np.abs(g)) <= settings.gradient_tol:
            converged = True
            break
        it += 1
        H = J.T @ J
        d = np.diag(H)
        d = d + 1e-9 * (d.mean() + 1e-300)
        try:
            step = -cho_solve(cho_factor(H + lam * np.diag(d)), g)
        except LinAlgError:
            lam *= 10.0
            trace.append(TraceRow(it, f, lam, math.nan, False))
            continue
        x_new = x + step
        r_new = model.residuals(x_new)
        f_new = float(r_new @ r_new)
        step_norm = float(np.linalg.norm(step))
        if f_new < f:
            x, r, f = x_new, r_new, f_new
            lam /= 3.0
            trace.append(TraceRow(it, f, lam, step_norm, True))
            J = model.jacobian(x)
            g = J.T @ r
            if step_norm <= settings.step_tol * (np.linalg.norm(x) + settings.step_tol):
                converged = True
                break
        else:
            lam *= 10.0
            trace.append(TraceRow(it, f, lam, step_norm, False))
            if step_norm <= settings.step_tol * (np.linalg.norm(x) + settings.step_tol):
                # no representable improvement left along the damped direction
                converged = True
                break
    # from_field restores bR_00 >= 0 if the solver crossed to the mirrored sign
    est = CalibrationEstimate.from_field(model.to_field(x), initial.refs)
    return RefineResult(est, converged, it, f0, f, trace)
