"""Quantized beam codebooks and EIRP coverage CDFs for a half-wavelength linear array.

Element ``i`` sees an extra path phase ``i * pi * sin(theta)`` in direction
``theta`` (radians from boresight), so a codeword ``c`` radiates

    P(theta) = |sum_i w_i(c_i) exp(j (i * pi * sin(theta)))|**2

where ``w_i(c_i)`` is the complex response of antenna ``i`` at setting
``c_i``: unit-amplitude nominal phases for the ideal pattern, the
calibration estimate for the predicted pattern and the ground truth for what
is actually radiated.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .array_model import ArrayConfig, GroundTruth

DEFAULT_DIRECTIONS_DEG = (90.0, 19.0, 40.0, -19.0, -40.0, 0.0)


def _steering(n: int, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return np.exp(1j * np.pi * np.sin(theta)[None, :] * np.arange(n)[:, None])  # (N, T)


def pattern(weights: np.ndarray, theta) -> np.ndarray:
    """Radiated power for complex element weights (..., N) over angles (T,) -> (..., T)."""
    weights = np.asarray(weights, dtype=complex)
    s = weights @ _steering(weights.shape[-1], theta)
    return s.real ** 2 + s.imag ** 2


def _select(values: np.ndarray, codewords: np.ndarray) -> np.ndarray:
    codewords = np.asarray(codewords, dtype=int)
    return values[np.arange(values.shape[0]), codewords]


def _finish(p: np.ndarray, codewords, theta):
    if np.ndim(codewords) == 1:
        p = p[0] if p.ndim > 1 else p
    if np.ndim(theta) == 0:
        p = p[..., 0]
    return float(p) if np.ndim(p) == 0 else p


def codebook_power(table: np.ndarray, codewords, theta):
    """Pattern of ``codewords`` given a per-(antenna, setting) complex response table."""
    cw = np.atleast_2d(np.asarray(codewords, dtype=int))
    return _finish(pattern(_select(table, cw), theta), codewords, theta)


def ideal_power(codewords, theta, config: ArrayConfig):
    table = np.exp(1j * np.broadcast_to(config.nominal_phases(), config.shape))
    return codebook_power(table, codewords, theta)


def estimated_power(codewords, estimate, theta):
    return codebook_power(estimate.b_hat * np.exp(1j * estimate.phi_hat), codewords, theta)


def true_power(codewords, gt: GroundTruth, theta):
    return codebook_power(gt.field, codewords, theta)


def all_codewords(config: ArrayConfig, fix_first: bool = True) -> np.ndarray:
    """Every codeword in lexicographic order; antenna 0 pinned to setting 0 if ``fix_first``."""
    n, K = config.shape
    first = [0] if fix_first else range(K)
    return np.array(list(itertools.product(first, *[range(K)] * (n - 1))), dtype=int)


PowerFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def design_codebook(power_fn: PowerFn, directions_deg: Sequence[float], config: ArrayConfig,
                    fix_first: bool = True) -> np.ndarray:
    """For each direction, the codeword maximizing ``power_fn`` (exhaustive search).

    ``power_fn(codewords (M, N), theta (T,))`` must return powers (M, T).  Ties
    resolve to the lexicographically smallest codeword.
    """
    directions = np.asarray(directions_deg, dtype=float)
    if np.any(np.abs(directions) > 90):
        raise ValueError("directions must lie within +-90 degrees")
    cands = all_codewords(config, fix_first)
    powers = np.asarray(power_fn(cands, np.deg2rad(directions))).reshape(len(cands), len(directions))
    return cands[np.argmax(powers, axis=0)]


def ideal_codebook(config: ArrayConfig, directions_deg=DEFAULT_DIRECTIONS_DEG) -> np.ndarray:
    return design_codebook(lambda cw, th: ideal_power(cw, th, config), directions_deg, config)


def calibrated_codebook(estimate, config: ArrayConfig, directions_deg=DEFAULT_DIRECTIONS_DEG) -> np.ndarray:
    return design_codebook(lambda cw, th: estimated_power(cw, estimate, th), directions_deg, config)


def sample_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """Angles whose sine is uniform on [-1, 1]: area-uniform for a pattern depending on sin(theta)."""
    return np.arcsin(rng.uniform(-1.0, 1.0, size=n))


def max_eirp(config: ArrayConfig, max_gain_db: float) -> float:
    """Largest possible radiated power: all elements at the top gain, in phase."""
    return (config.n_antennas * 10.0 ** (max_gain_db / 20.0)) ** 2


def coverage_eirp(gt: GroundTruth, codebook: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Per direction, the best true power over the codebook."""
    return true_power(np.atleast_2d(codebook), gt, np.atleast_1d(theta)).reshape(-1, np.size(theta)).max(axis=0)


@dataclass
class EirpReport:
    """Pooled coverage samples for one codebook, in dB relative to the maximum EIRP.

    Pooling equally-sized instances gives the instance-averaged CDF.
    ``percentiles[p]`` is the ``p``-th percentile of that CDF.
    """

    name: str
    scaled_eirp_db: np.ndarray
    cum_prob: np.ndarray
    percentiles: dict[int, float] = field(default_factory=dict)

    @classmethod
    def from_samples(cls, name: str, scaled_db: np.ndarray, levels=(50, 99)) -> "EirpReport":
        x = np.sort(np.asarray(scaled_db, dtype=float).ravel())
        if x.size == 0:
            raise ValueError("no EIRP samples")
        cum = np.arange(1, x.size + 1) / x.size
        return cls(name, x, cum, {int(p): coverage_percentile(x, p) for p in levels})

    def cdf_at(self, grid) -> np.ndarray:
        """Empirical CDF P(EIRP <= x) evaluated on ``grid``."""
        return np.searchsorted(self.scaled_eirp_db, np.asarray(grid, dtype=float), side="right") / self.scaled_eirp_db.size

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["scaled_eirp_db", "cum_prob"])
            for x, p in zip(self.scaled_eirp_db, self.cum_prob):
                writer.writerow([repr(float(x)), repr(float(p))])

    def summary(self) -> dict:
        return {"codebook": self.name, **{f"p{p}_db": v for p, v in self.percentiles.items()}}


def coverage_percentile(sorted_db: np.ndarray, p: float) -> float:
    """EIRP at which the sample CDF reaches ``p`` percent.

    Order statistic ``ceil(p/100 * n)`` of the sorted samples, no interpolation.
    """
    x = np.asarray(sorted_db)
    idx = int(math.ceil(p / 100.0 * x.size)) - 1
    return float(x[min(max(idx, 0), x.size - 1)])


def write_summary_json(reports: Sequence[EirpReport], path: str | Path, extra: dict | None = None) -> None:
    payload = {"codebooks": [r.summary() for r in reports]}
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")
