"""Simulated boresight power measurements and the calibration measurement plan.

A measurement switches on one or two elements (or, for REV, the whole array),
sums their far-field contributions, adds one complex AWGN sample and records
the detected power ``|field + w|**2``.  Noise variance is relative to unit
single-element power.

Fields are evaluated in the frame of the first active element, i.e. as
``sum_e b_e exp(j(phi_e - phi_first)) + w``.  Since ``w`` is circularly
symmetric this has the same distribution as the absolute-frame sum, and it
makes every simulated power a function of phase differences only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .array_model import ArrayConfig, GroundTruth, make_rng
from .errors import ConfigurationError

INDIVIDUAL = "individual"
PAIR = "pair"

Element = tuple[int, int]


@dataclass(frozen=True)
class NoiseModel:
    """Complex AWGN at ``snr_db`` (``math.inf`` for noiseless) with its own seed."""

    snr_db: float = math.inf
    seed: object = None
    repeats: int = 1

    def __post_init__(self):
        snr = float(self.snr_db)
        if math.isnan(snr) or snr == -math.inf:
            raise ConfigurationError(f"snr_db must be finite or +inf, got {self.snr_db!r}")
        object.__setattr__(self, "snr_db", snr)
        if self.repeats < 1:
            raise ConfigurationError("repeats must be >= 1")

    @property
    def noiseless(self) -> bool:
        return self.snr_db == math.inf

    @property
    def variance(self) -> float:
        return 0.0 if self.noiseless else 10.0 ** (-self.snr_db / 10.0)


def draw_noise(noise: NoiseModel, rng: np.random.Generator) -> complex:
    """One circularly-symmetric complex Gaussian sample with total variance ``noise.variance``."""
    if noise.noiseless:
        return 0j
    re, im = rng.standard_normal(2)
    return complex(re, im) * math.sqrt(noise.variance / 2.0)


@dataclass(frozen=True)
class MeasurementRecord:
    kind: str
    first: Element
    second: Element | None
    power: float

    def __post_init__(self):
        if (self.kind == PAIR) != (self.second is not None) or self.kind not in (INDIVIDUAL, PAIR):
            raise ValueError(f"inconsistent record kind {self.kind!r} for second={self.second!r}")
        if self.kind == PAIR and self.first == self.second:
            raise ValueError(f"pair record needs two distinct elements, got {self.first} twice")
        if not self.power >= 0:
            raise ValueError(f"power must be non-negative, got {self.power}")

    @property
    def elements(self) -> tuple[Element, ...]:
        return (self.first,) if self.second is None else (self.first, self.second)


def _check_element(gt: GroundTruth, i: int, k: int) -> None:
    n, K = gt.config.shape
    if not (0 <= i < n and 0 <= k < K):
        raise IndexError(f"element ({i}, {k}) outside a {n}x{K} array")


def field_power(b: Sequence[float], phi: Sequence[float], noise: NoiseModel, rng: np.random.Generator) -> float:
    """Detected power of the coherent sum of elements ``b * exp(j*phi)`` plus noise.

    ``noise.repeats`` independent detections are averaged.
    """
    ref = float(phi[0])
    field = complex(b[0])
    for amp, ph in zip(b[1:], phi[1:]):
        d = ph - ref
        field += float(amp) * complex(math.cos(d), math.sin(d))
    total = 0.0
    for _ in range(noise.repeats):
        total += abs(field + draw_noise(noise, rng)) ** 2
    return total / noise.repeats


def simulate_individual(gt: GroundTruth, i: int, k: int, noise: NoiseModel, rng=None) -> float:
    _check_element(gt, i, k)
    rng = make_rng(noise.seed) if rng is None else rng
    return field_power([gt.b[i, k]], [gt.phi[i, k]], noise, rng)


def simulate_pair(gt: GroundTruth, i: int, k: int, m: int, n: int, noise: NoiseModel, rng=None) -> float:
    _check_element(gt, i, k)
    _check_element(gt, m, n)
    if (i, k) == (m, n):
        raise ValueError(f"pair measurement needs two distinct elements, got ({i}, {k}) twice")
    rng = make_rng(noise.seed) if rng is None else rng
    return field_power([gt.b[i, k], gt.b[m, n]], [gt.phi[i, k], gt.phi[m, n]], noise, rng)


class MeasurementSession:
    """Measurement oracle over one ground truth; logs every measurement it makes.

    All noise comes from a single generator seeded by ``noise.seed`` and is
    consumed in call order, so a given sequence of requests is reproducible.
    """

    def __init__(self, gt: GroundTruth, noise: NoiseModel | None = None, rng=None):
        self.gt = gt
        self.noise = noise if noise is not None else NoiseModel()
        self.rng = make_rng(self.noise.seed) if rng is None else make_rng(rng)
        self.records: list[MeasurementRecord] = []

    @property
    def config(self) -> ArrayConfig:
        return self.gt.config

    def individual(self, i: int, k: int) -> float:
        power = simulate_individual(self.gt, i, k, self.noise, self.rng)
        self.records.append(MeasurementRecord(INDIVIDUAL, (i, k), None, power))
        return power

    def pair(self, first: Element, second: Element) -> float:
        power = simulate_pair(self.gt, *first, *second, self.noise, self.rng)
        self.records.append(MeasurementRecord(PAIR, tuple(first), tuple(second), power))
        return power

    def measure(self, entry: "PlanEntry") -> float:
        if entry.kind == INDIVIDUAL:
            return self.individual(*entry.first)
        return self.pair(entry.first, entry.second)


# -- measurement plan ----------------------------------------------------------

@dataclass(frozen=True)
class PlanEntry:
    kind: str
    first: Element
    second: Element | None = None


MeasurementPlan = list  # list[PlanEntry]


def _check_ref(config: ArrayConfig, r: int, name: str) -> None:
    if not 0 <= r < config.n_phases:
        raise ConfigurationError(f"reference index {name}={r} outside 0..{config.n_phases - 1}")


def plan_individual(config: ArrayConfig) -> list[PlanEntry]:
    """Every element on its own."""
    n, K = config.shape
    return [PlanEntry(INDIVIDUAL, (i, k)) for i in range(n) for k in range(K)]


def plan_ant1_vs_origin(config: ArrayConfig) -> list[PlanEntry]:
    """All Ant1 settings against (0, 0); used to pick the second reference."""
    return [PlanEntry(PAIR, (1, k), (0, 0)) for k in range(config.n_phases)]


def plan_other_antennas(config: ArrayConfig, r1: int) -> list[PlanEntry]:
    """Antennas 2.. against (0, 0) and (1, r1)."""
    _check_ref(config, r1, "r1")
    n, K = config.shape
    out = []
    for i in range(2, n):
        for k in range(K):
            out.append(PlanEntry(PAIR, (i, k), (0, 0)))
            out.append(PlanEntry(PAIR, (i, k), (1, r1)))
    return out


def plan_ant0(config: ArrayConfig, r1: int, r2: int) -> list[PlanEntry]:
    """Remaining Ant0 settings against (1, r1) and (2, r2)."""
    _check_ref(config, r1, "r1")
    _check_ref(config, r2, "r2")
    out = []
    for k in range(1, config.n_phases):
        out.append(PlanEntry(PAIR, (0, k), (1, r1)))
        out.append(PlanEntry(PAIR, (0, k), (2, r2)))
    return out


def plan_ant1_rest(config: ArrayConfig, r1: int, r3: int) -> list[PlanEntry]:
    """Remaining Ant1 settings against (2, r3); their (0, 0) pairs already exist."""
    _check_ref(config, r1, "r1")
    _check_ref(config, r3, "r3")
    return [PlanEntry(PAIR, (1, k), (2, r3)) for k in range(config.n_phases) if k != r1]


def build_plan(config: ArrayConfig, r1: int, r2: int, r3: int) -> MeasurementPlan:
    """Full measurement plan for given reference indices, in execution order."""
    if config.n_antennas < 3:
        raise ConfigurationError("the calibration plan needs at least 3 antennas")
    return (plan_individual(config) + plan_ant1_vs_origin(config) + plan_other_antennas(config, r1)
            + plan_ant0(config, r1, r2) + plan_ant1_rest(config, r1, r3))


def plan_size(config: ArrayConfig) -> int:
    return 3 * config.n_antennas * config.n_phases - 3


def run_plan(gt: GroundTruth, plan: Iterable[PlanEntry], noise: NoiseModel) -> list[MeasurementRecord]:
    session = MeasurementSession(gt, noise)
    for entry in plan:
        session.measure(entry)
    return session.records


# -- CSV -----------------------------------------------------------------------

RECORD_COLUMNS = ("kind", "i", "k", "m", "n", "power")


def write_records_csv(records: Iterable[MeasurementRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for rec in records:
            m, n = rec.second if rec.second is not None else ("", "")
            writer.writerow([rec.kind, rec.first[0], rec.first[1], m, n, repr(float(rec.power))])


def read_records_csv(path: str | Path) -> list[MeasurementRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            second = None if row["m"] == "" else (int(row["m"]), int(row["n"]))
            out.append(MeasurementRecord(row["kind"], (int(row["i"]), int(row["k"])), second, float(row["power"])))
    return out
