import numpy as np
import pytest

from phasecal.array_model import ArrayConfig, ErrorSpec, GroundTruth, generate_ground_truth

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def cfg():
    return ArrayConfig(4, 3)


@pytest.fixture
def ideal(cfg):
    return GroundTruth.ideal(cfg)


@pytest.fixture
def random_gt(cfg):
    return generate_ground_truth(cfg, ErrorSpec(), 1234)


def dyadic(gt: GroundTruth, bits: int = 40) -> GroundTruth:
    """Copy of ``gt`` with phases rounded to multiples of 2**-bits (exact under small dyadic shifts)."""
    scale = 2.0 ** bits
    phi = np.round(np.asarray(gt.phi) * scale) / scale
    return GroundTruth(gt.config, gt.b, phi, gt.delta_ant, gt.delta_ph)
