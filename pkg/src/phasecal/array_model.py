"""Array geometry, error distributions and ground-truth generation.

Phase indices are 0-based throughout: index ``k`` has nominal phase
``k * 2*pi / 2**q_bits``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigurationError

Interval = tuple[float, float]


@dataclass(frozen=True)
class ArrayConfig:
    n_antennas: int = 4
    q_bits: int = 3

    def __post_init__(self):
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 2:
            raise ConfigurationError(f"n_antennas must be an integer >= 2, got {self.n_antennas!r}")
        if int(self.q_bits) != self.q_bits or self.q_bits < 3:
            raise ConfigurationError(f"q_bits must be an integer >= 3, got {self.q_bits!r}")

    @property
    def n_phases(self) -> int:
        return 2 ** self.q_bits

    @property
    def phase_step(self) -> float:
        return 2.0 * math.pi / self.n_phases

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_antennas, self.n_phases)

    def nominal_phases(self) -> np.ndarray:
        return np.arange(self.n_phases) * self.phase_step


def nominal_phase(config: ArrayConfig, k: int) -> float:
    """Error-free phase of phase-shifter setting ``k`` in radians."""
    if not 0 <= k < config.n_phases:
        raise IndexError(f"phase index {k} out of range for {config.n_phases} phases")
    return k * config.phase_step


def _interval(value: Any, name: str) -> Interval:
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{name} must be a [low, high] pair, got {value!r}") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ConfigurationError(f"{name} must satisfy low <= high, got [{lo}, {hi}]")
    return (lo, hi)


@dataclass(frozen=True)
class ErrorSpec:
    """Uniform error distributions for gain (dB) and phase (degrees).

    With ``phase_dependent=False`` only per-antenna errors are drawn: one gain
    per antenna and no phase-shifter error.
    """

    gain_range_db: Interval = (-1.5, 1.5)
    phase_shifter_err_range_deg: Interval = (-10.0, 10.0)
    antenna_path_err_range_deg: Interval = (-180.0, 180.0)
    phase_dependent: bool = True

    def __post_init__(self):
        for name in ("gain_range_db", "phase_shifter_err_range_deg", "antenna_path_err_range_deg"):
            object.__setattr__(self, name, _interval(getattr(self, name), name))
        object.__setattr__(self, "phase_dependent", bool(self.phase_dependent))

    @classmethod
    def zero(cls, phase_dependent: bool = True) -> "ErrorSpec":
        return cls((0.0, 0.0), (0.0, 0.0), (0.0, 0.0), phase_dependent)

    @property
    def max_gain_db(self) -> float:
        return self.gain_range_db[1]


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """True complex element responses ``b * exp(j*phi)`` per (antenna, phase index).

    ``delta_ant`` and ``delta_ph`` keep the error decomposition the phases were
    built from; ``phi = nominal + delta_ph + delta_ant[:, None]``.
    """

    config: ArrayConfig
    b: np.ndarray
    phi: np.ndarray
    delta_ant: np.ndarray = field(repr=False)
    delta_ph: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("b", "phi", "delta_ph"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != self.config.shape:
                raise ConfigurationError(f"{name} has shape {arr.shape}, expected {self.config.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        delta_ant = np.array(self.delta_ant, dtype=float)
        delta_ant.setflags(write=False)
        object.__setattr__(self, "delta_ant", delta_ant)
        if np.any(self.b <= 0):
            raise ConfigurationError("element amplitudes must be positive")

    @property
    def field(self) -> np.ndarray:
        return self.b * np.exp(1j * self.phi)

    def relative_phi(self) -> np.ndarray:
        """Phases referenced to element (0, 0), the quantity calibration recovers."""
        return self.phi - self.phi[0, 0]

    def shifted(self, c: float) -> "GroundTruth":
        """Same array with a constant ``c`` added to every phase."""
        return GroundTruth(self.config, self.b, self.phi + c, self.delta_ant + c, self.delta_ph)

    @classmethod
    def ideal(cls, config: ArrayConfig) -> "GroundTruth":
        zeros = np.zeros(config.shape)
        return cls(config, np.ones(config.shape), zeros + config.nominal_phases(),
                   np.zeros(config.n_antennas), zeros)

    @classmethod
    def from_components(cls, config: ArrayConfig, b, delta_ant, delta_ph=None) -> "GroundTruth":
        b = np.broadcast_to(np.asarray(b, dtype=float).reshape(config.n_antennas, -1), config.shape)
        delta_ant = np.asarray(delta_ant, dtype=float)
        delta_ph = np.zeros(config.shape) if delta_ph is None else np.asarray(delta_ph, dtype=float)
        phi = config.nominal_phases()[None, :] + delta_ph + delta_ant[:, None]
        return cls(config, b, phi, delta_ant, delta_ph)


def make_rng(seed: Any = None) -> np.random.Generator:
    """Generator from an int, a sequence of ints, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (list, tuple)):
        seed = np.random.SeedSequence([int(s) for s in seed])
    return np.random.default_rng(seed)


def stream(master_seed: int, *keys: int) -> np.random.Generator:
    """Independent stream keyed by ``(master_seed, *keys)``.

    Keys are plain integers (stream purpose, SNR index, iteration index ...),
    so results never depend on the order in which instances are evaluated.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *map(int, keys)]))


def generate_ground_truth(config: ArrayConfig, spec: ErrorSpec, seed: Any = None) -> GroundTruth:
    rng = make_rng(seed)
    n, K = config.shape
    lo, hi = spec.gain_range_db
    if spec.phase_dependent:
        gain_db = rng.uniform(lo, hi, size=(n, K))
        lo_ph, hi_ph = np.deg2rad(spec.phase_shifter_err_range_deg)
        delta_ph = rng.uniform(lo_ph, hi_ph, size=(n, K))
    else:
        gain_db = np.repeat(rng.uniform(lo, hi, size=(n, 1)), K, axis=1)
        delta_ph = np.zeros((n, K))
    lo_ant, hi_ant = np.deg2rad(spec.antenna_path_err_range_deg)
    delta_ant = rng.uniform(lo_ant, hi_ant, size=n)
    b = 10.0 ** (gain_db / 20.0)
    return GroundTruth.from_components(config, b, delta_ant, delta_ph)


# -- JSON config files -------------------------------------------------------

def config_to_dict(config: ArrayConfig, spec: ErrorSpec, seed: int | None = None) -> dict:
    out = {
        "n_antennas": config.n_antennas,
        "q_bits": config.q_bits,
        "gain_range_db": list(spec.gain_range_db),
        "phase_shifter_err_range_deg": list(spec.phase_shifter_err_range_deg),
        "antenna_path_err_range_deg": list(spec.antenna_path_err_range_deg),
        "phase_dependent": spec.phase_dependent,
    }
    if seed is not None:
        out["seed"] = seed
    return out


def config_from_dict(data: dict) -> tuple[ArrayConfig, ErrorSpec, int | None]:
    defaults = ErrorSpec()
    config = ArrayConfig(int(data.get("n_antennas", 4)), int(data.get("q_bits", 3)))
    spec = ErrorSpec(
        data.get("gain_range_db", defaults.gain_range_db),
        data.get("phase_shifter_err_range_deg", defaults.phase_shifter_err_range_deg),
        data.get("antenna_path_err_range_deg", defaults.antenna_path_err_range_deg),
        data.get("phase_dependent", True),
    )
    seed = data.get("seed")
    return config, spec, None if seed is None else int(seed)


def save_config(path: str | Path, config: ArrayConfig, spec: ErrorSpec, seed: int | None = None) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config, spec, seed), indent=2) + "\n")


def load_config(path: str | Path) -> tuple[ArrayConfig, ErrorSpec, int | None]:
    return config_from_dict(json.loads(Path(path).read_text()))
